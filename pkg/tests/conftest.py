import numpy as np
import pytest

from viscowave.constitutive import GLSM, AgingIso, AgingPlusExp, Elastic, ExpAging, ExpConvIso, FractionalZener
from viscowave.kelvin import isotropic_kelvin
from viscowave import mittag_leffler as ml


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _fz(alpha=0.5, a=0.3, nodes=48):
    prony, _ = ml.prony_fit(alpha, a, nodes, (1e-3 * a, 1e3 * a), n_check=33)
    return FractionalZener(alpha, a, isotropic_kelvin(1.0, 1.0), isotropic_kelvin(0.5, 0.5), prony)


def model_zoo():
    """One in-invariant instance of every time-steppable kind."""
    return {
        "Elastic": Elastic(1.0, 1.0),
        "ExpConvIso": ExpConvIso(1.0, 1.0, 0.1, 0.1),
        "GLSM": GLSM(1.0, 1.0, [0.5], [0.05], [0.3], [0.1]),
        "AgingIso": AgingIso(ExpAging(1.0, 0.5, 0.1), ExpAging(1.0, 0.7, 0.2)),
        "AgingPlusExp": AgingPlusExp(ExpAging(1.0, 0.5, 0.1), ExpAging(1.0, 0.7, 0.2), [0.5], [0.05], [0.3], [0.1]),
        "FractionalZener": _fz(0.5, 0.05),
    }


@pytest.fixture(scope="session")
def zoo():
    return model_zoo()


@pytest.fixture(scope="session")
def fz_model():
    return _fz()


ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store one acceptance outcome (printed in the terminal summary) and assert it."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
