"""Discontinuity of the Lempert function of Omega_n at derogatory matrices.

A derogatory A = diag(A_0, A_1) with nilpotent A_0 is perturbed to
B = A + delta X. The spectral lower bound for l_Omega(A, B) decays like a
fractional power of delta, while cyclic approximants A^j -> A satisfy
l_Omega(A^j, B) <= l_G(sigma(A_0^j), sigma(B_0)), which decays like
delta^(m - r). Certificates evaluate both sides numerically and report when
the first strictly exceeds the second.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundReport, bharali_lower, disc_search_upper, lift_upper_cyclic, sandwich_report
from .config import RunConfig
from .errors import (CertificateFailed, ChainInconclusive, DegenerateInput, NoFeasibleDisc,
                     NotCyclic, OutsideBall)
from .gn_geometry import ball_radius_in_Gn, ball_upper_bound_from_origin
from .matrix_core import (as_matrix, is_cyclic, matrix_to_json, sigma, spectral_data,
                          spectral_radius)

MIN_MARGIN = 1e-4
SHRINK_FACTOR = 0.5
MAX_SHRINK = 20


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """Nilpotent block of size m with superdiagonal ones at columns J, plus an invertible A_1."""

    m: int
    J: tuple[int, ...]
    delta: float
    A1: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.complex128))

    def __post_init__(self):
        J = tuple(sorted(set(int(j) for j in self.J)))
        object.__setattr__(self, "J", J)
        A1 = np.atleast_2d(np.asarray(self.A1, dtype=np.complex128))
        if A1.size == 0:
            A1 = np.zeros((0, 0), dtype=np.complex128)
        object.__setattr__(self, "A1", A1)
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if any(j < 2 or j > self.m for j in J):
            raise ValueError("J must be a subset of [2..m]")
        if len(J) > self.m - 2:
            raise ValueError("need r = #J <= m - 2")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if A1.shape[0] != A1.shape[1]:
            raise ValueError("A1 must be square")
        if A1.size:
            eig = np.linalg.eigvals(A1)
            if np.min(np.abs(eig)) < 1e-9:
                raise ValueError("0 must not be an eigenvalue of A1")
            if np.max(np.abs(eig)) >= 1:
                raise OutsideBall("A1 must lie in the spectral ball")

    @property
    def r(self) -> int:
        return len(self.J)

    @property
    def n(self) -> int:
        return self.m + self.A1.shape[0]

    @property
    def k(self) -> int:
        """Size of the largest Jordan block of A_0."""
        best = run = 0
        prev = None
        for j in self.J:
            run = run + 1 if prev is not None and j == prev + 1 else 1
            best = max(best, run)
            prev = j
        return best + 1

    def with_delta(self, delta: float) -> "PerturbationSpec":
        return PerturbationSpec(self.m, self.J, delta, self.A1)


def _blocks(top: np.ndarray, A1: np.ndarray) -> np.ndarray:
    m, p = top.shape[0], A1.shape[0]
    M = np.zeros((m + p, m + p), dtype=np.complex128)
    M[:m, :m] = top
    M[m:, m:] = A1
    return M


def _nilpotent_block(spec: PerturbationSpec) -> np.ndarray:
    A0 = np.zeros((spec.m, spec.m), dtype=np.complex128)
    for j in spec.J:
        A0[j - 2, j - 1] = 1.0
    return A0


def _perturbation_direction(spec: PerturbationSpec) -> np.ndarray:
    X = np.zeros((spec.m, spec.m), dtype=np.complex128)
    for j in range(2, spec.m + 1):
        if j not in spec.J:
            X[j - 2, j - 1] = -1.0
    X[spec.m - 1, 0] = 1.0
    return X


def build_perturbation(spec: PerturbationSpec):
    """(A, X, B) with B = A + delta X; X lives in the top-left m x m block."""
    A0 = _nilpotent_block(spec)
    X0 = _perturbation_direction(spec)
    A = _blocks(A0, spec.A1)
    X = _blocks(X0, np.zeros_like(spec.A1))
    B = A + spec.delta * X
    if spectral_radius(B) >= 1:
        raise OutsideBall("delta too large: B leaves the spectral ball")
    return A, X, B


def det_identity_details(spec: PerturbationSpec) -> dict:
    """sigma(B_0) against (0, ..., 0, +-delta^(m-r)), with the observed sign of sigma_m."""
    B0 = _nilpotent_block(spec) + spec.delta * _perturbation_direction(spec)
    s = sigma(B0)
    target = spec.delta ** (spec.m - spec.r)
    low = float(np.max(np.abs(s[:-1]))) if spec.m > 1 else 0.0
    res = max(low, abs(abs(s[-1]) - target))
    sign = 0.0 if target == 0 else float(np.real(s[-1]) / target)
    return {"residual": res, "sigma": s, "target": target, "sign": round(sign)}


def verify_det_identity(spec: PerturbationSpec) -> float:
    return det_identity_details(spec)["residual"]


def cyclic_approximants(spec: PerturbationSpec, j: int) -> np.ndarray:
    """A with every vacant superdiagonal slot of A_0 set to 1/j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    A0 = _nilpotent_block(spec)
    for i in range(2, spec.m + 1):
        if i not in spec.J:
            A0[i - 2, i - 1] = 1.0 / j
    return _blocks(A0, spec.A1)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    pair: dict
    lower: tuple[str, float]
    uppers: list[dict]
    conclusion: bool
    margin: float
    parameters: dict = field(default_factory=dict)

    @property
    def max_upper(self) -> float:
        return max(u["value"] for u in self.uppers)

    @property
    def gap(self) -> float:
        return self.lower[1] - self.max_upper

    def to_json(self) -> dict:
        return {
            "pair": self.pair,
            "lower": {"method": self.lower[0], "value": self.lower[1]},
            "uppers": self.uppers,
            "conclusion": self.conclusion,
            "margin": self.margin,
            "gap": self.gap,
            "parameters": self.parameters,
        }


def _declared(values_mults) -> list[tuple[complex, int]]:
    return [(complex(v), int(k)) for v, k in values_mults]


def _hint_with_A1(top_hint, A1: np.ndarray, tol: float):
    if A1.size == 0:
        return top_hint
    extra = [(e.value, e.alg_mult) for e in spectral_data(A1, tol).eigen]
    return _declared(list(top_hint) + extra)


class _CyclicUpper:
    """Upper bounds for l_Omega between two cyclic matrices, via l_G of their sigma-images.

    Disc searches are cached by the pair of sigma-points, so approximants
    sharing a spectrum reuse one search and only repeat the lift check.
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._discs: dict[bytes, tuple | None] = {}

    def _disc(self, s, t):
        key = np.concatenate([s, t]).tobytes()
        if key not in self._discs:
            try:
                self._discs[key] = disc_search_upper(s, t, self.cfg.degree_for(s.size),
                                                     self.cfg.restarts, self.cfg.seed)
            except (NoFeasibleDisc, OutsideBall):
                self._discs[key] = None
        return self._discs[key]

    def __call__(self, A, B, hint_a=None, hint_b=None) -> list[tuple[str, float]]:
        cfg = self.cfg
        if not (is_cyclic(A, cfg.tol, declared=hint_a) and is_cyclic(B, cfg.tol, declared=hint_b)):
            raise NotCyclic("upper bounds through G_n need two cyclic endpoints")
        s, t = sigma(A), sigma(B)
        out = []
        if not np.any(s):
            R = ball_radius_in_Gn(s.size, cfg.directions, cfg.seed)
            try:
                out.append(("ball", ball_upper_bound_from_origin(t, R)))
            except OutsideBall:
                pass
        found = self._disc(s, t)
        if found is not None:
            alpha, disc = found
            out.append(("disc_search+lift",
                        lift_upper_cyclic(A, B, disc, alpha, cfg.tol, cfg.seed,
                                          hint_a=hint_a, hint_b=hint_b)))
        return out


def _best(cands: list[tuple[str, float]]) -> tuple[str, float]:
    return min(cands, key=lambda c: c[1])


def _certify(A, B, blocks: dict, lower_hints, upper_hints, cfg: RunConfig,
             bounder: _CyclicUpper, parameters: dict) -> Certificate:
    margin = max(cfg.margin, MIN_MARGIN)
    lower = bharali_lower(A, B, cfg.tol, *lower_hints)
    uppers = []
    for j, (Aj, Bj) in blocks.items():
        cands = bounder(Aj, Bj, *upper_hints)
        if not cands:
            raise CertificateFailed("no upper bound available", {"j": j, "lower": lower})
        method, value = _best(cands)
        uppers.append({"j": j, "method": method, "value": value,
                       "candidates": {name: v for name, v in cands}})
    conclusion = lower - max(u["value"] for u in uppers) >= margin
    pair = {"A": matrix_to_json(A), "B": matrix_to_json(B)}
    return Certificate(pair, ("bharali", lower), uppers, conclusion, margin, parameters)


def _shrinking(run, start: float, auto_shrink: bool, name: str) -> Certificate:
    value = start
    attempts = []
    for _ in range(MAX_SHRINK + 1 if auto_shrink else 1):
        cert = run(value)
        attempts.append({name: value, "lower": cert.lower[1], "max_upper": cert.max_upper})
        if cert.conclusion:
            cert.parameters["attempts"] = attempts
            return cert
        value *= SHRINK_FACTOR
    raise CertificateFailed(f"no strict gap of at least {cert.margin:g} found",
                            {"attempts": attempts, "last": cert.to_json()})


def discontinuity_certificate(spec: PerturbationSpec, j_list=(10, 100), cfg: RunConfig | None = None,
                              auto_shrink: bool = True) -> Certificate:
    """Certify l_Omega(A, B) > l_Omega(A^j, B) for every j in ``j_list``.

    Lower bound: spectral bound on the exact spectra of A and B. Upper bounds:
    l_Omega_n(A^j, B) <= l_Omega_m(A_0^j, B_0) = l_G_m(sigma A_0^j, sigma B_0),
    bounded by the inscribed ball and by a lifted explicit disc. With
    ``auto_shrink`` delta is halved (at most 20 times) until the gap reaches
    the margin.
    """
    cfg = cfg or RunConfig()
    if spec.delta == 0:
        raise DegenerateInput("delta = 0 gives B = A")
    if not j_list:
        raise ValueError("j_list must not be empty")
    bounder = _CyclicUpper(cfg)
    m = spec.m

    def run(delta: float) -> Certificate:
        sp = spec.with_delta(delta)
        A, _, B = build_perturbation(sp)
        B0 = B[:m, :m]
        t = sigma(B0)[-1]
        roots_b0 = [cmath.rect(abs(t) ** (1 / m), (cmath.phase(t) + 2 * math.pi * q) / m) for q in range(m)]
        hint_b0 = _declared((z, 1) for z in roots_b0)
        hint_a = _hint_with_A1(_declared([(0, m)]), sp.A1, cfg.tol)
        hint_b = _hint_with_A1(hint_b0, sp.A1, cfg.tol)
        blocks = {j: (cyclic_approximants(sp, j)[:m, :m], B0) for j in j_list}
        params = {"m": m, "J": list(sp.J), "r": sp.r, "k": sp.k, "delta": delta, "n": sp.n}
        return _certify(A, B, blocks, (hint_a, hint_b), (None, hint_b0), cfg, bounder, params)

    return _shrinking(run, spec.delta, auto_shrink, "delta")


def example_5_1(eps: float = 0.1, cfg: RunConfig | None = None, j_list=(10, 100),
                auto_shrink: bool = False) -> Certificate:
    """A nilpotent with one superdiagonal 1 at (2, 3); B = diag(eps, w eps, w^2 eps), w^3 = 1.

    sigma(A) = 0 and sigma(B) = (0, 0, eps^3). The ``uppers`` list holds the
    G_3 bound (j = 0) and the cyclic approximants A^j of A.
    """
    cfg = cfg or RunConfig()
    if eps == 0:
        raise DegenerateInput("eps = 0 gives sigma(A) = sigma(B)")
    if not 0 < eps <= 0.2:
        raise ValueError("eps must lie in (0, 0.2]")
    bounder = _CyclicUpper(cfg)
    w = cmath.exp(2j * math.pi / 3)

    def run(e: float) -> Certificate:
        A = np.zeros((3, 3), dtype=np.complex128)
        A[1, 2] = 1.0
        roots = [e, w * e, w * w * e]
        B = np.diag(roots)
        hint_a = _declared([(0, 3)])
        hint_b = _declared((z, 1) for z in roots)
        C = np.zeros((3, 3), dtype=np.complex128)
        C[0, 1] = C[1, 2] = 1.0  # a cyclic matrix with sigma = 0 stands in for the G_3 bound
        blocks = {0: (C, B)}
        for j in j_list:
            Aj = A.copy()
            Aj[0, 1] = 1.0 / j
            blocks[j] = (Aj, B)
        return _certify(A, B, blocks, (hint_a, hint_b), (None, hint_b), cfg, bounder, {"eps": e})

    return _shrinking(run, eps, auto_shrink, "eps")


def example_5_2(mu: complex = 0.2, cfg: RunConfig | None = None) -> BoundReport:
    """A as in example_5_1 and B = mu I + (superdiagonal ones); both sides equal |mu|."""
    cfg = cfg or RunConfig()
    mu = complex(mu)
    if abs(mu) >= 1:
        raise OutsideBall("|mu| must be < 1")
    A = np.zeros((3, 3), dtype=np.complex128)
    A[1, 2] = 1.0
    B = mu * np.eye(3) + np.diag([1.0, 1.0], 1)
    return sandwich_report(A, B, cfg, hint_a=[(0, 3)], hint_b=[(mu, 3)], pair="example_5_2")


# ---------------------------------------------------------------------------
# Lempert versus Green
# ---------------------------------------------------------------------------

def green_reduction(B, tol: float = 1e-7) -> np.ndarray:
    """diag of the eigenvalues of B with algebraic multiplicity, sorted by real then imaginary part."""
    vals = spectral_data(as_matrix(B), tol).multiset()
    order = np.lexsort((vals.imag, vals.real))
    return np.diag(vals[order])


def jordan_family(mu: complex, alpha: complex, n: int) -> np.ndarray:
    """B_alpha = mu I + alpha (superdiagonal ones)."""
    return complex(mu) * np.eye(n, dtype=np.complex128) + complex(alpha) * np.eye(n, k=1)


def green_vs_lempert_chain(A, mu: complex, alpha: complex, cfg: RunConfig | None = None,
                           hint_a=None) -> dict:
    """Certify l_Omega(A, B_0) > g_Omega(A, B_0) for B_alpha = mu I + alpha N.

    l(A, B_0) >= lower > upper >= l(A, B_alpha) >= g(A, B_alpha) = g(A, B_0),
    where the middle upper bound is a lifted disc between sigma(A) and
    sigma(B_alpha). Raises ChainInconclusive when lower - upper < margin.
    """
    cfg = cfg or RunConfig()
    A = as_matrix(A)
    n = A.shape[0]
    mu, alpha = complex(mu), complex(alpha)
    if alpha == 0:
        raise DegenerateInput("alpha must be nonzero (B_0 is derogatory)")
    if abs(mu) >= 1:
        raise OutsideBall("|mu| must be < 1")
    sd = spectral_data(A, cfg.tol, hint_a)
    if len(sd.eigen) < 2:
        raise DegenerateInput("A needs at least two distinct eigenvalues")
    if not is_cyclic(A, cfg.tol, declared=hint_a):
        raise NotCyclic("A must be cyclic")
    B0 = jordan_family(mu, 0, n)
    Ba = jordan_family(mu, alpha, n)
    hint_b = [(mu, n)]
    margin = max(cfg.margin, MIN_MARGIN)
    lower = bharali_lower(A, B0, cfg.tol, hint_a, hint_b)
    cands = _CyclicUpper(cfg)(A, Ba, hint_a, hint_b)
    if not cands:
        raise ChainInconclusive("no upper bound for l(A, B_alpha)", {"lower": lower})
    method, upper = _best(cands)
    report = {
        "A": matrix_to_json(A),
        "mu": [mu.real, mu.imag],
        "alpha": [alpha.real, alpha.imag],
        "green_reduction": matrix_to_json(green_reduction(Ba, cfg.tol)),
        "lower": {"method": "bharali", "value": lower, "pair": "A,B_0"},
        "upper": {"method": method, "value": upper, "pair": "A,B_alpha"},
        "chain": [
            "l(A,B_0) >= lower",
            "lower > upper + margin",
            "upper >= l(A,B_alpha) >= g(A,B_alpha)",
            "g(A,B_alpha) = g(A,B_0)",
        ],
        "margin": margin,
        "gap": lower - upper,
        "conclusion": lower - upper >= margin,
    }
    if not report["conclusion"]:
        raise ChainInconclusive(f"gap {lower - upper:.3g} below margin {margin:g}", report)
    return report
