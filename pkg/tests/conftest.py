"""Shared fixtures: random-state generation and the acceptance summary."""

import math

import numpy as np
import pytest

from cvqkd.gaussian import (
    covariance,
    is_physical,
    symplectic_eigenvalues,
)
from cvqkd.keyrate import mi_oracle

#: acceptance-criterion outcomes collected over the session, number -> (ok, detail)
_CRITERIA = {}


@pytest.fixture
def criterion_log():
    """Callable recording one acceptance-criterion outcome for the summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, detail = _CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status} ({detail})")


def random_normal_form_state(rng):
    """A mixed two-mode state in normal form with well-separated branches.

    Rejection-samples (lambda_a, lambda_b, c_x, c_p) until the state is
    physical, clearly mixed (smaller symplectic eigenvalue >= 1.005) and the
    two quadrature branches carry distinguishably different information
    (formula-vs-oracle comparisons would be ambiguous at a branch tie).
    """
    while True:
        la = float(rng.uniform(1.05, 3.0))
        lb = float(rng.uniform(1.05, 3.0))
        cap = math.sqrt((la * la - 1.0) * (lb * lb - 1.0)) / math.sqrt(max(la, lb))
        cx = float(rng.uniform(-cap, cap))
        cp = float(rng.uniform(-cap, cap))
        g = covariance(
            [
                [la, 0.0, cx, 0.0],
                [0.0, la, 0.0, cp],
                [cx, 0.0, lb, 0.0],
                [0.0, cp, 0.0, lb],
            ]
        )
        if not is_physical(g):
            continue
        if symplectic_eigenvalues(g)[1] < 1.005:
            continue
        mi_x, mi_p = mi_oracle(g)
        if abs(mi_x - mi_p) < 1e-3:
            continue
        return g


#: the reconstructed two-mode state quoted for the 11.1 dB operating point,
#: reused across test modules as a realistic mildly-rotated fixture
RECONSTRUCTED_EXAMPLE = np.array(
    [
        [0.55, -0.09, 0.45, -0.14],
        [-0.09, 24.7, -0.07, -23.2],
        [0.45, -0.07, 0.55, 0.01],
        [-0.14, -23.2, 0.01, 23.7],
    ]
)


@pytest.fixture
def reconstructed_example():
    """The measured-state fixture wrapped as a CovarianceMatrix."""
    return covariance(RECONSTRUCTED_EXAMPLE)
