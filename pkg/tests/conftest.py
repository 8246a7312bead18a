import numpy as np
import pytest

from complexity_transfer.dataset import LabeledTable, ShiftSpec, make_shifted_pair


def blobs(n_per_class=30, gap=6.0, n_features=2, seed=0, classes=2):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c in range(classes):
        centre = np.zeros(n_features)
        centre[0] = gap * c
        X.append(centre + rng.standard_normal((n_per_class, n_features)) * 0.5)
        y.append(np.full(n_per_class, c))
    return LabeledTable(np.vstack(X), np.concatenate(y), classes)


@pytest.fixture
def blob_table():
    return blobs()


@pytest.fixture(scope="session")
def shifted_pair():
    return make_shifted_pair(
        ShiftSpec(source_size=300, target_size=400, marginal_shift=0.5, posterior_shift=0.25, seed=3)
    )



_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props or not (report.when == "call" or report.failed):
        return
    number, name = props["criterion"]
    if report.failed or number not in _criteria:
        _criteria[number] = (name, "FAIL" if report.failed else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        name, status = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  {name}")
