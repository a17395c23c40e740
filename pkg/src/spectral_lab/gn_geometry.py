"""Geometry of the symmetrized polydisc G_n = sigma(Omega_n).

A point s = (s_1, ..., s_n) lies in G_n exactly when every root of

    t^n - s_1 t^(n-1) + s_2 t^(n-2) - ... + (-1)^n s_n

lies in the open unit disc.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np

from .errors import DegenerateDenominator, OutsideBall
from .matrix_core import DEFAULT_SEED, charpoly_from_sigma, poly_roots

DEFAULT_MEMBERSHIP_MARGIN = 1e-9
_GOLDEN = (math.sqrt(5) - 1) / 2


def as_point(s) -> np.ndarray:
    p = np.array(s, dtype=np.complex128).ravel()
    if p.size < 1:
        raise ValueError("a sigma point needs at least one coordinate")
    return p


def max_root_modulus(s) -> float:
    """Largest root modulus of the polynomial attached to ``s`` (Aberth route)."""
    return float(np.max(np.abs(poly_roots(charpoly_from_sigma(as_point(s))))))


def batch_max_root_modulus(S: np.ndarray) -> np.ndarray:
    """Largest root modulus for each row of ``S`` (shape (N, n)).

    Vectorized through companion-matrix eigenvalues; used in hot loops where
    the scalar Aberth route is too slow.
    """
    S = np.asarray(S, dtype=np.complex128)
    N, n = S.shape
    if n == 1:
        return np.abs(S[:, 0])
    C = np.zeros((N, n, n), dtype=np.complex128)
    C[:, np.arange(1, n), np.arange(n - 1)] = 1.0
    signs = np.array([(-1) ** (n - k + 1) for k in range(n)])
    # last column holds -a_k = -(-1)^(n-k) s_(n-k)
    C[:, :, n - 1] = signs * S[:, ::-1]
    return np.max(np.abs(np.linalg.eigvals(C)), axis=1)


def in_Gn(s, margin: float = DEFAULT_MEMBERSHIP_MARGIN) -> bool:
    """True iff all roots have modulus <= 1 - margin (and < 1)."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    r = max_root_modulus(s)
    return r < 1.0 and r <= 1.0 - margin


def pseudo_hyperbolic(a: complex, b: complex) -> float:
    """|a - b| / |1 - conj(b) a| for a, b in the unit disc."""
    if abs(a) >= 1 or abs(b) >= 1:
        raise ValueError("pseudo_hyperbolic needs both points in the open unit disc")
    if a == b:
        return 0.0
    return float(abs(a - b) / abs(1 - np.conj(b) * a))


def _pseudo_hyperbolic_vec(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.abs(1 - np.conj(b) * a)


def f_lambda(s, lam):
    """(s1 + 2 s2 lam + 3 s3 lam^2) / (3 + 2 s1 lam + s2 lam^2) on G_3 (broadcasts in lam)."""
    s1, s2, s3 = as_point(s)
    lam = np.asarray(lam, dtype=np.complex128)
    return (s1 + 2 * s2 * lam + 3 * s3 * lam ** 2) / (3 + 2 * s1 * lam + s2 * lam ** 2)


def _f_den(s, lam):
    s1, s2, _ = as_point(s)
    return 3 + 2 * s1 * lam + s2 * lam ** 2


def caratheodory_lb_G3(s, t, grid: int = 4096) -> float:
    """Lower bound for the Lempert function of G_3 between ``s`` and ``t``.

    Maximizes the pseudohyperbolic distance between f_lam(s) and f_lam(t)
    over a uniform grid of |lam| = 1, then refines once around the best node
    by golden-section search. Any value obtained this way is at most the true
    supremum, so the bound stays valid whatever the grid.
    """
    s, t = as_point(s), as_point(t)
    if s.size != 3 or t.size != 3:
        raise ValueError("caratheodory_lb_G3 needs points of G_3")
    if grid < 64:
        raise ValueError("grid must be >= 64")
    if np.array_equal(s, t):
        return 0.0
    theta = 2 * math.pi * np.arange(grid) / grid
    lam = np.exp(1j * theta)
    bad = (np.abs(_f_den(s, lam)) < 1e-12) | (np.abs(_f_den(t, lam)) < 1e-12)
    if bad.any():
        warnings.warn(f"skipping {int(bad.sum())} grid nodes with vanishing f_lambda denominator",
                      RuntimeWarning, stacklevel=2)
        if bad.all():
            raise DegenerateDenominator("f_lambda denominator vanishes on the whole grid")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = _pseudo_hyperbolic_vec(f_lambda(s, lam), f_lambda(t, lam))
    vals = np.where(bad | ~np.isfinite(vals), -np.inf, vals)
    k = int(np.argmax(vals))
    best = float(vals[k])

    def g(th: float) -> float:
        z = complex(math.cos(th), math.sin(th))
        if abs(_f_den(s, z)) < 1e-12 or abs(_f_den(t, z)) < 1e-12:
            return -math.inf
        return float(_pseudo_hyperbolic_vec(f_lambda(s, z), f_lambda(t, z)))

    h = 2 * math.pi / grid
    lo, hi = theta[k] - h, theta[k] + h
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    g1, g2 = g(x1), g(x2)
    for _ in range(60):
        if g1 < g2:
            lo, x1, g1 = x1, x2, g2
            x2 = lo + _GOLDEN * (hi - lo)
            g2 = g(x2)
        else:
            hi, x2, g2 = x2, x1, g1
            x1 = hi - _GOLDEN * (hi - lo)
            g1 = g(x1)
    return max(best, g1, g2)


def unit_directions(n: int, count: int, seed=DEFAULT_SEED) -> np.ndarray:
    """``count`` seeded unit vectors in C^n.

    The first k rows do not depend on ``count``, so a larger sample always
    contains a smaller one drawn with the same seed.
    """
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n, 2))
    d = g[..., 0] + 1j * g[..., 1]
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@lru_cache(maxsize=64)
def ball_radius_in_Gn(n: int, directions: int = 1000, seed=DEFAULT_SEED, safety: float = 0.9) -> float:
    """Safe radius R such that the Euclidean ball B(0, R) lies inside G_n.

    Along each sampled direction the first exit from G_n is located by a
    coarse scan of [0, 1] followed by bisection; the minimum exit distance is
    scaled by ``safety``. The radius is an estimate from sampling, made
    conservative by the safety factor.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if directions < 1:
        raise ValueError("directions must be >= 1")
    dirs = unit_directions(n, directions, seed)
    steps = np.linspace(0.0, 1.0, 33)[1:]
    inside = np.ones(directions, dtype=bool)
    lo = np.zeros(directions)
    hi = np.ones(directions)
    for tstep in steps:
        r = batch_max_root_modulus(tstep * dirs)
        exits = inside & (r >= 1.0)
        hi[exits] = tstep
        inside &= ~exits
        lo[inside] = tstep
    # directions that never exit keep lo = 1; bisect the rest
    lo[inside] = 1.0
    active = ~inside
    for _ in range(48):
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        r = batch_max_root_modulus(mid[:, None] * dirs)
        ok = r < 1.0
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid, hi)
    return float(safety * np.min(lo))


def ball_upper_bound_from_origin(t, R: float) -> float:
    """Upper bound ||t|| / R for the Lempert function of G_n between 0 and t."""
    t = as_point(t)
    norm = float(np.linalg.norm(t))
    if norm >= R:
        raise OutsideBall(f"||t|| = {norm:.3e} is not inside the ball of radius {R:.3e}")
    return norm / R


def point_to_json(s) -> dict:
    p = as_point(s)
    return {"n": int(p.size), "re": p.real.tolist(), "im": p.imag.tolist()}


def point_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["n"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed point JSON: {exc}") from None
    if re.shape != (n,) or im.shape != (n,):
        raise ValueError(f"point JSON declares n={n} but has {re.size} coordinates")
    return re + 1j * im
