import pytest

from revpref.core import ChoiceDataset

ABC = ["a", "b", "c"]
XYZ = ["x", "y", "z"]


def build(obs, labels):
    return ChoiceDataset.build(obs, labels=labels)


@pytest.fixture
def d_rat():
    return build([("ab", "a"), ("ac", "a"), ("bc", "b"), ("abc", "a")], ABC)


@pytest.fixture
def d_warp():
    return build([("xy", "y"), ("xyz", "x")], XYZ)


@pytest.fixture
def d_sarp():
    return build([("xy", "x"), ("yz", "y"), ("xz", "z")], XYZ)


@pytest.fixture
def d_stc():
    return build([("xyz", "x"), ("yz", "y")], XYZ)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
