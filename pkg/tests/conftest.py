from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def load_golden(name: str) -> dict:
    return json.loads((GOLDEN / name).read_text())


def random_complex(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_ball_matrix(rng, n, radius=0.6):
    """Random matrix rescaled to spectral radius ``radius``."""
    M = random_complex(rng, (n, n))
    return M * (radius / np.max(np.abs(np.linalg.eigvals(M))))


def well_conditioned(rng, n, max_cond=100.0):
    while True:
        P = np.eye(n) + 0.3 * random_complex(rng, (n, n))
        if np.linalg.cond(P) <= max_cond:
            return P


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def admissible_disc(rng, form, degree=5, scale=0.3):
    """Random polynomial disc whose coordinate i vanishes to order d_i at 0."""
    from spectral_lab.discs import AnalyticDisc
    from spectral_lab.lifting import degree_vector

    d = degree_vector(form)
    c = random_complex(rng, (form.n, degree + 1), scale)
    for i, di in enumerate(d):
        c[i, :di] = 0
    return AnalyticDisc(c)


def sigma_mp(M, dps=60):
    """sigma of a matrix in extended precision (Faddeev-LeVerrier), as mpc values."""
    import mpmath as mp

    with mp.workdps(dps):
        n = len(M)
        A = mp.matrix([[x if isinstance(x, mp.mpc) else mp.mpc(complex(x)) for x in row] for row in M])
        Mk = mp.zeros(n, n)
        c = [mp.mpc(1)]
        for k in range(1, n + 1):
            Mk = A * Mk + c[-1] * mp.eye(n)
            c.append(-sum((A * Mk)[i, i] for i in range(n)) / k)
        # characteristic polynomial t^n + c_1 t^(n-1) + ... ; sigma_j = (-1)^j c_j
        return [(-1) ** j * c[j] for j in range(1, n + 1)]


def vanishing_slopes(B, M, ts=(1e-6, 1e-5, 1e-4)):
    """Least-squares log-log slope of |sigma_i(B + t M)| against t, per coordinate."""
    import mpmath as mp

    logs = []
    for t in ts:
        with mp.workdps(60):
            Bt = [[mp.mpc(complex(B[i][j])) + mp.mpf(t) * mp.mpc(complex(M[i][j])) for j in range(len(B))]
                  for i in range(len(B))]
            s = sigma_mp(Bt)
            logs.append([float(mp.log10(abs(x))) if x != 0 else -np.inf for x in s])
    logs = np.array(logs)
    x = np.log10(ts)
    return np.array([np.polyfit(x, logs[:, i], 1)[0] for i in range(logs.shape[1])])
