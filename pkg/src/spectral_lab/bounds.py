"""Lower and upper bounds for the Lempert function of Omega_n and G_n.

Lower bounds:
    * ``bharali_lower`` - spectral bound for Omega_n from the eigenvalues and
      their minimal-polynomial multiplicities.
    * ``caratheodory_lb_G3`` (re-exported from gn_geometry) - for G_3.

Upper bounds:
    * ``ball_upper_bound_from_origin`` - Euclidean ball inside G_n.
    * ``disc_search_upper`` - explicit polynomial discs found by penalized
      Nelder-Mead descent and re-verified independently.
    * ``lift_upper_cyclic`` - a G_n disc between sigma-images of two cyclic
      matrices lifts to Omega_n, so its parameter bounds l_Omega as well.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .config import RunConfig
from .discs import AnalyticDisc, MatrixDisc
from .errors import (InconsistentSandwich, NoFeasibleDisc, NotCyclic, OutsideBall,
                     SpectralLabError)
from .gn_geometry import (as_point, ball_radius_in_Gn, ball_upper_bound_from_origin,
                          batch_max_root_modulus, caratheodory_lb_G3, in_Gn, pseudo_hyperbolic)
from .matrix_core import (DEFAULT_SEED, DEFAULT_TOL, as_matrix, companion, is_cyclic,
                          krylov_matrix, clustered_roots, charpoly_from_sigma, sigma, spectral_data)

log = logging.getLogger(__name__)

SANDWICH_TOL = 1e-6
INTERP_TOL = 1e-8
DISC_MARGIN = 1e-6
BOUNDARY_GRID = 256


# ---------------------------------------------------------------------------
# spectral lower bound
# ---------------------------------------------------------------------------

def _branch(outer, inner) -> float:
    best = 0.0
    for mu in outer:
        prod = 1.0
        for e in inner:
            prod *= pseudo_hyperbolic(mu, e.value) ** e.min_mult
        best = max(best, prod)
    return best


def bharali_lower(A, B, tol: float = DEFAULT_TOL, hint_a=None, hint_b=None) -> float:
    """Spectral lower bound for l_Omega(A, B).

    max( max_{mu in sp B} prod_{lam in sp A} p(mu, lam)^m_A(lam),
         max_{lam in sp A} prod_{mu in sp B} p(lam, mu)^m_B(mu) )

    with p the pseudohyperbolic distance and m the multiplicity in the
    minimal polynomial. ``hint_a``/``hint_b`` pass exact spectra of matrices
    built by construction (see ``spectral_data``).
    """
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same size")
    sa = spectral_data(A, tol, hint_a)
    sb = spectral_data(B, tol, hint_b)
    if sa.radius >= 1 or sb.radius >= 1:
        raise OutsideBall("both matrices must lie in the spectral ball")
    vals_a = [e.value for e in sa.eigen]
    vals_b = [e.value for e in sb.eigen]
    return max(_branch(vals_b, sa.eigen), _branch(vals_a, sb.eigen))


# ---------------------------------------------------------------------------
# disc search
# ---------------------------------------------------------------------------

def _sigma_of_polys(polys: list[np.ndarray]) -> np.ndarray:
    """Coefficient arrays of the elementary symmetric functions of polynomial entries."""
    deg = sum(p.size - 1 for p in polys)
    n = len(polys)
    e = [np.zeros(deg + 1, dtype=np.complex128) for _ in range(n + 1)]
    e[0][0] = 1.0
    for k, p in enumerate(polys, start=1):
        for j in range(k, 0, -1):
            prod = np.convolve(e[j - 1], p)[: deg + 1]
            e[j] = e[j] + np.pad(prod, (0, deg + 1 - prod.size))
    return np.array(e[1:])


def _shapes(s: np.ndarray, t: np.ndarray, degree: int) -> list[tuple[str, np.ndarray]]:
    """Maps w -> Phi(w) with Phi(0) = s and Phi(1) = t, as (n, degree+1) arrays in w."""
    n = s.size
    out = []
    lin = np.zeros((n, degree + 1), dtype=np.complex128)
    lin[:, 0] = s
    lin[:, 1] = t - s
    out.append(("linear", lin))
    if degree < n:
        return out
    a = clustered_roots(charpoly_from_sigma(s))
    b = clustered_roots(charpoly_from_sigma(t))
    if n <= 4:
        perms = list(itertools.permutations(range(n)))
    else:
        by_angle = lambda z: np.argsort(np.angle(z))
        p = np.empty(n, dtype=int)
        p[by_angle(a)] = by_angle(b)
        perms = [tuple(range(n)), tuple(p)]
    seen = set()
    for perm in perms:
        entries = [np.array([a[i], b[perm[i]] - a[i]]) for i in range(n)]
        Phi = _sigma_of_polys(entries)
        key = tuple(np.round(Phi.ravel(), 12))
        if key in seen:
            continue
        seen.add(key)
        # pin the endpoints exactly
        Phi[:, 0] = s
        Phi[:, 1] += t - Phi.sum(axis=1)
        padded = np.zeros((n, degree + 1), dtype=np.complex128)
        padded[:, : Phi.shape[1]] = Phi
        out.append((f"diagonal{perm}", padded))
    return out


class _DiscProblem:
    """Penalized objective over (log alpha, higher coefficients) with exact interpolation."""

    def __init__(self, s, t, degree, margin, grid):
        self.s, self.t = s, t
        self.n = s.size
        self.degree = degree
        self.margin = margin
        self.zeta = np.exp(2j * math.pi * np.arange(grid) / grid)
        self.powers = self.zeta[:, None] ** np.arange(degree + 1)
        self.feasible: list[tuple[float, np.ndarray]] = []

    def coeffs(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        alpha = math.exp(x[0])
        c = np.zeros((self.n, self.degree + 1), dtype=np.complex128)
        c[:, 0] = self.s
        if self.degree >= 2:
            hi = x[1:].reshape(2, self.n, self.degree - 1)
            c[:, 2:] = hi[0] + 1j * hi[1]
        # phi(alpha) = t fixes the linear coefficients
        rest = c[:, 2:] @ (alpha ** np.arange(2, self.degree + 1)) if self.degree >= 2 else 0.0
        c[:, 1] = ((self.t - self.s) - rest) / alpha
        return alpha, c

    def encode(self, alpha: float, c: np.ndarray) -> np.ndarray:
        hi = c[:, 2:]
        return np.concatenate([[math.log(alpha)], hi.real.ravel(), hi.imag.ravel()])

    def max_modulus(self, c: np.ndarray) -> float:
        vals = self.powers @ c.T
        if not np.all(np.isfinite(vals)):
            return math.inf
        return float(np.max(batch_max_root_modulus(vals)))

    def objective(self, x: np.ndarray, alpha0: float, weight: float) -> float:
        if x[0] >= 0.0:
            return 1e6 * (1.0 + x[0])
        alpha, c = self.coeffs(x)
        mm = self.max_modulus(c)
        if mm <= 1.0 - 1.5 * self.margin:
            self.feasible.append((alpha, c))
        h = max(0.0, mm - (1.0 - 3.0 * self.margin))
        return alpha / alpha0 + weight * h * h

    def shape_alpha(self, Phi: np.ndarray) -> float | None:
        """Smallest alpha for which zeta -> Phi(zeta / alpha) stays in G_n (bisection)."""
        def ok(alpha):
            vals = (self.zeta[:, None] / alpha) ** np.arange(Phi.shape[1]) @ Phi.T
            return np.all(np.isfinite(vals)) and np.max(batch_max_root_modulus(vals)) <= 1 - 3 * self.margin
        hi = 1.0 - 1e-9
        if not ok(hi):
            return None
        lo = 1e-12
        if ok(lo):
            return lo
        for _ in range(60):
            mid = math.sqrt(lo * hi)
            if ok(mid):
                hi = mid
            else:
                lo = mid
            if hi / lo < 1 + 1e-10:
                break
        return hi


def verify_disc(disc: AnalyticDisc, s, t, alpha: float, grid: int = BOUNDARY_GRID) -> tuple[float, float]:
    """(interpolation residual, boundary membership margin) of a candidate disc."""
    s, t = as_point(s), as_point(t)
    res = max(float(np.max(np.abs(disc(0.0) - s))), float(np.max(np.abs(disc(alpha) - t))))
    return res, disc.membership_margin(grid)


def disc_search_upper(s, t, degree: int | None = None, restarts: int = 8, seed: int = DEFAULT_SEED,
                      margin: float = DISC_MARGIN, grid: int = BOUNDARY_GRID,
                      stages: int = 5, maxfev: int | None = None) -> tuple[float, AnalyticDisc]:
    """Upper bound for l_{G_n}(s, t) from an explicit polynomial disc.

    phi(0) = s holds by construction and phi(alpha) = t is solved for the
    linear coefficients, so the free variables are log(alpha) and the
    coefficients of degree >= 2. Boundary membership on ``grid`` points of
    |zeta| = 1 enters as a squared hinge penalty whose weight grows tenfold
    per stage. Each restart is seeded from its own index; the best disc that
    passes the independent check of ``verify_disc`` is returned.
    """
    s, t = as_point(s), as_point(t)
    n = s.size
    if t.size != n:
        raise ValueError("s and t must have the same dimension")
    degree = 2 * n if degree is None else int(degree)
    if degree < n:
        raise ValueError("degree must be >= n")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if np.array_equal(s, t):
        return 0.0, AnalyticDisc.constant(s, degree)
    if not (in_Gn(s, margin) and in_Gn(t, margin)):
        raise OutsideBall("both points must lie in G_n with the membership margin")

    prob = _DiscProblem(s, t, degree, margin, grid)
    starts = []
    for name, Phi in _shapes(s, t, degree):
        a = prob.shape_alpha(Phi)
        if a is None:
            continue
        c = Phi / a ** np.arange(degree + 1)
        starts.append((a, name, c))
        prob.feasible.append((a, c))
    starts.sort(key=lambda item: item[0])
    if not starts:
        # fall back to a small linear disc around s; the penalty has to repair it
        lin = np.zeros((n, degree + 1), dtype=np.complex128)
        lin[:, 0], lin[:, 1] = s, (t - s) / 0.99
        starts.append((0.99, "linear-infeasible", lin))
    dim = 1 + 2 * n * (degree - 1)
    maxfev = maxfev or (400 + 20 * dim)

    results = []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        alpha0, name, c0 = starts[r % len(starts)]
        x = prob.encode(alpha0, c0)
        if r >= len(starts):
            x[1:] += 0.02 * rng.standard_normal(x.size - 1)
            x[0] += 0.05 * abs(rng.standard_normal())
        prob.feasible = []
        weight = 1e2
        for _ in range(stages):
            simplex = np.vstack([x, x + np.diag(np.full(x.size, 0.02))])
            res = minimize(prob.objective, x, args=(alpha0, weight), method="Nelder-Mead",
                           options={"initial_simplex": simplex, "maxfev": maxfev // stages,
                                    "xatol": 1e-12, "fatol": 1e-14})
            x = res.x
            weight *= 10.0
        if prob.feasible:
            best = min(prob.feasible, key=lambda item: item[0])
            results.append((best[0], r, best[1]))
    for a, name, c in starts:
        results.append((a, -1, c))
    results.sort(key=lambda item: (item[0], item[1]))
    for alpha, _, c in results:
        disc = AnalyticDisc(c)
        res, mem = verify_disc(disc, s, t, alpha, grid)
        if res <= INTERP_TOL and mem >= margin and alpha < 1.0:
            return float(alpha), disc
        log.debug("candidate alpha=%.6g rejected: residual %.2e, margin %.2e", alpha, res, mem)
    raise NoFeasibleDisc("no restart produced a disc passing interpolation and membership checks")


# ---------------------------------------------------------------------------
# lifting through cyclic endpoints
# ---------------------------------------------------------------------------

def _cyclic_basis(A: np.ndarray, seed: int, candidates: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Krylov basis K with A = K companion(sigma(A)) K^-1, and column weights d.

    K diag(d) has unit columns; Krylov columns of nearly nilpotent matrices
    shrink geometrically, and the weights undo that before any logarithm is
    taken. The starting vector is the best conditioned among the standard
    basis and ``candidates`` seeded random vectors.
    """
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    starts = list(np.eye(n, dtype=np.complex128))
    starts += list(rng.standard_normal((candidates, n)) + 1j * rng.standard_normal((candidates, n)))
    best = None
    for v in starts:
        K = krylov_matrix(A, v / np.linalg.norm(v))
        norms = np.linalg.norm(K, axis=0)
        if np.min(norms) == 0:
            continue
        cond = np.linalg.cond(K / norms)
        if best is None or cond < best[0]:
            best = (cond, K, 1.0 / norms)
    if best is None or not np.isfinite(best[0]):
        raise NotCyclic("no cyclic vector found")
    return best[1], best[2]


def conjugation_path(K0: np.ndarray, K1: np.ndarray, z1: complex):
    """Entire invertible G(zeta) with G(0) = K0 and G(z1) = K1."""
    n = K0.shape[0]
    R = K1 @ np.linalg.inv(K0)
    # det R = 1 keeps the logarithm small; scalar factors commute with everything
    scale = np.linalg.det(R) ** (1.0 / n)
    L = scipy.linalg.logm(R / scale)
    lscale = np.log(scale)

    def G(zeta: complex) -> np.ndarray:
        w = zeta / z1
        return np.exp(w * lscale) * scipy.linalg.expm(w * L) @ K0
    return G


def cyclic_lift_witness(A, B, disc: AnalyticDisc, alpha: float, seed: int = DEFAULT_SEED) -> MatrixDisc:
    """Matrix disc equal to A at 0 and B at alpha with sigma-image ``disc``.

    zeta -> H(zeta) D(zeta)^-1 companion(phi(zeta)) D(zeta) H(zeta)^-1, where
    D(zeta) is a positive diagonal path between the column weights of the two
    Krylov bases and H joins the rescaled bases.
    """
    A, B = as_matrix(A), as_matrix(B)
    KA, dA = _cyclic_basis(A, seed)
    KB, dB = _cyclic_basis(B, seed + 1)
    H = conjugation_path(KA * dA, KB * dB, alpha)
    lA, lB = np.log(dA), np.log(dB)

    def func(zeta: complex) -> np.ndarray:
        w = zeta / alpha
        d = np.exp((1 - w) * lA + w * lB)
        M = companion(disc(zeta)) * (d[None, :] / d[:, None])
        h = H(zeta)
        return h @ M @ np.linalg.inv(h)
    return MatrixDisc(A.shape[0], func, "companion lift")


def _witness_samples(alpha: complex) -> np.ndarray:
    """Sample points for the sigma identity: the circle |zeta| = |alpha|/2 and the segment [0, alpha].

    The conjugation path grows like exp(zeta/alpha L), so points far from the
    segment only measure rounding in the conjugation, not the witness.
    """
    w = np.concatenate([0.5 * np.exp(2j * math.pi * np.arange(12) / 12), [0.25, 0.5, 0.75, 1.0]])
    return alpha * w


def lift_upper_cyclic(A, B, disc: AnalyticDisc, alpha: float, tol: float = DEFAULT_TOL,
                      seed: int = DEFAULT_SEED, verify: bool = True, hint_a=None, hint_b=None) -> float:
    """Upper bound alpha for l_Omega(A, B), valid because both endpoints are cyclic."""
    A, B = as_matrix(A), as_matrix(B)
    if not is_cyclic(A, tol, declared=hint_a):
        raise NotCyclic("A is derogatory")
    if not is_cyclic(B, tol, declared=hint_b):
        raise NotCyclic("B is derogatory")
    if alpha == 0:
        if np.max(np.abs(sigma(A) - sigma(B))) > INTERP_TOL:
            raise ValueError("alpha = 0 requires sigma(A) = sigma(B)")
        return 0.0
    res = max(float(np.max(np.abs(disc(0.0) - sigma(A)))), float(np.max(np.abs(disc(alpha) - sigma(B)))))
    if res > INTERP_TOL:
        raise ValueError(f"disc does not interpolate sigma(A), sigma(B) (residual {res:.2e})")
    if verify:
        W = cyclic_lift_witness(A, B, disc, alpha, seed)
        scale = 1.0 + max(np.linalg.norm(A), np.linalg.norm(B))
        err = max(np.linalg.norm(W(0.0) - A), np.linalg.norm(W(alpha) - B)) / scale
        samples = _witness_samples(alpha)
        err_sigma = max(float(np.max(np.abs(sigma(W(z)) - disc(z)))) for z in samples)
        if err > 1e-8 or err_sigma > 1e-8:
            raise SpectralLabError(f"lift witness failed verification (endpoint {err:.2e}, sigma {err_sigma:.2e})")
    return float(alpha)


# ---------------------------------------------------------------------------
# sandwich reports
# ---------------------------------------------------------------------------

@dataclass
class Bound:
    name: str
    value: float
    kind: str  # "lower" | "upper"
    space: str  # "Omega" | "G"
    witness: dict | None = None

    def to_json(self) -> dict:
        d = {"name": self.name, "value": self.value, "kind": self.kind, "space": self.space}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class BoundReport:
    pair: str
    lower_bounds: dict[str, Bound] = field(default_factory=dict)
    upper_bounds: dict[str, Bound] = field(default_factory=dict)
    verdict: str = "consistent"
    notes: list[str] = field(default_factory=list)

    def best_lower(self, space: str | None = None) -> float:
        vals = [b.value for b in self.lower_bounds.values() if space in (None, b.space)]
        return max(vals) if vals else 0.0

    def best_upper(self, space: str | None = None) -> float:
        vals = [b.value for b in self.upper_bounds.values() if space in (None, b.space)]
        return min(vals) if vals else math.inf

    def add(self, bound: Bound) -> None:
        target = self.lower_bounds if bound.kind == "lower" else self.upper_bounds
        target[bound.name] = bound

    def check(self, cyclic_pair: bool = False) -> None:
        """Raise InconsistentSandwich on any violated lower <= upper relation.

        l_G <= l_Omega always, so G-lower bounds must sit below every upper
        bound; Omega-lower bounds only constrain G-upper bounds when both
        endpoints are cyclic (then l_G = l_Omega).
        """
        for lo in self.lower_bounds.values():
            for up in self.upper_bounds.values():
                comparable = lo.space == up.space or lo.space == "G" or cyclic_pair
                if comparable and lo.value > up.value + SANDWICH_TOL:
                    raise InconsistentSandwich(
                        f"{lo.name}={lo.value:.9g} ({lo.space}) exceeds {up.name}={up.value:.9g} ({up.space})")
        gap = any(lo.space == "Omega" and up.space == "G" and lo.value > up.value + SANDWICH_TOL
                  for lo in self.lower_bounds.values() for up in self.upper_bounds.values())
        self.verdict = "gap" if gap else "consistent"

    def to_json(self) -> dict:
        return {
            "pair": self.pair,
            "bounds": [b.to_json() for b in self.lower_bounds.values()]
            + [b.to_json() for b in self.upper_bounds.values()],
            "verdict": self.verdict,
            "notes": list(self.notes),
        }


def sandwich_report(A, B, cfg: RunConfig | None = None, hint_a=None, hint_b=None,
                    pair: str = "A,B") -> BoundReport:
    """Collect every applicable bound for l_Omega(A, B) and l_G(sigma A, sigma B)."""
    cfg = cfg or RunConfig()
    A, B = as_matrix(A), as_matrix(B)
    n = A.shape[0]
    sA, sB = sigma(A), sigma(B)
    report = BoundReport(pair=pair)

    report.add(Bound("bharali", bharali_lower(A, B, cfg.tol, hint_a, hint_b), "lower", "Omega"))
    if n == 3:
        report.add(Bound("caratheodory3", caratheodory_lb_G3(sA, sB, cfg.grid), "lower", "G"))

    for origin, other in ((sA, sB), (sB, sA)):
        if np.all(origin == 0):
            R = ball_radius_in_Gn(n, cfg.directions, cfg.seed)
            try:
                report.add(Bound("ball", ball_upper_bound_from_origin(other, R), "upper", "G",
                                 {"R_safe": R}))
            except OutsideBall as exc:
                report.notes.append(f"ball bound skipped: {exc}")
            break

    disc = alpha = None
    try:
        alpha, disc = disc_search_upper(sA, sB, cfg.degree_for(n), cfg.restarts, cfg.seed)
        report.add(Bound("disc_search", alpha, "upper", "G",
                         {"alpha": alpha, "disc": disc.to_json()}))
    except (NoFeasibleDisc, OutsideBall) as exc:
        report.notes.append(f"disc search failed: {exc}")

    cyclic_pair = is_cyclic(A, cfg.tol, declared=hint_a) and is_cyclic(B, cfg.tol, declared=hint_b)
    if cyclic_pair and disc is not None:
        value = lift_upper_cyclic(A, B, disc, alpha, cfg.tol, cfg.seed, hint_a=hint_a, hint_b=hint_b)
        report.add(Bound("lift", value, "upper", "Omega", {"alpha": alpha}))

    report.check(cyclic_pair)
    return report
