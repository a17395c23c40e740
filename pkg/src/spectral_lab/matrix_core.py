"""Dense complex matrix primitives for small n.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` and polynomials
are 1-D coefficient arrays in ascending order (constant term first, leading
coefficient last), the same convention as ``numpy.polynomial``.

The characteristic polynomial is written

    det(tI - A) = t^n + sum_j (-1)^j sigma_j(A) t^(n-j)

so ``sigma(A)`` is the vector of elementary symmetric functions of the
eigenvalues of ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AmbiguousClustering, NonConvergence, Singular

DEFAULT_TOL = 1e-7
DEFAULT_SEED = 42
_EPS = np.finfo(float).eps


def as_matrix(A) -> np.ndarray:
    """Coerce ``A`` to a square complex128 array, validating its shape."""
    M = np.array(A, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square n x n matrix with n >= 1, got shape {M.shape}")
    return M


# ---------------------------------------------------------------------------
# characteristic polynomial and sigma
# ---------------------------------------------------------------------------

def sigma(A) -> np.ndarray:
    """Elementary symmetric functions (sigma_1, ..., sigma_n) of the eigenvalues.

    Uses Newton's identities on the power sums tr(A^k); the only divisions
    are by the integers k, so no pivoting or eigen-decomposition is involved.
    """
    M = as_matrix(A)
    n = M.shape[0]
    power_sums = np.empty(n, dtype=np.complex128)
    P = np.eye(n, dtype=np.complex128)
    for k in range(n):
        P = P @ M
        power_sums[k] = np.trace(P)
    e = np.zeros(n + 1, dtype=np.complex128)
    e[0] = 1.0
    for k in range(1, n + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * power_sums[i - 1]
        e[k] = acc / k
    return e[1:]


def charpoly_from_sigma(s) -> np.ndarray:
    """Ascending coefficients of t^n - s_1 t^(n-1) + ... + (-1)^n s_n."""
    s = np.asarray(s, dtype=np.complex128).ravel()
    n = s.size
    coeffs = np.empty(n + 1, dtype=np.complex128)
    coeffs[n] = 1.0
    for j in range(1, n + 1):
        coeffs[n - j] = (-1) ** j * s[j - 1]
    return coeffs


def charpoly(A) -> np.ndarray:
    """Ascending coefficients of det(tI - A)."""
    return charpoly_from_sigma(sigma(A))


def sigma_from_roots(roots) -> np.ndarray:
    """Elementary symmetric functions of ``roots`` by repeated linear products."""
    roots = np.asarray(roots, dtype=np.complex128).ravel()
    e = np.zeros(roots.size + 1, dtype=np.complex128)
    e[0] = 1.0
    for k, z in enumerate(roots, start=1):
        e[1:k + 1] = e[1:k + 1] + z * e[0:k]
    return e[1:]


# ---------------------------------------------------------------------------
# polynomial roots (Aberth-Ehrlich)
# ---------------------------------------------------------------------------

def poly_eval(p, z):
    """Horner evaluation of ascending coefficients ``p`` at ``z`` (broadcasts)."""
    p = np.asarray(p, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    acc = np.zeros_like(z) + p[-1]
    for c in p[-2::-1]:
        acc = acc * z + c
    return acc


def _trim(p: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(p != 0)
    if nz.size == 0:
        return p[:1] * 0
    return p[: nz[-1] + 1]


def _root_radius(monic: np.ndarray) -> float:
    # Fujiwara bound on root moduli
    n = monic.size - 1
    terms = [abs(monic[n - k]) ** (1.0 / k) for k in range(1, n + 1)]
    terms[-1] = (abs(monic[0]) / 2) ** (1.0 / n)
    return max(2 * max(terms), 1e-300)


def _aberth(monic: np.ndarray, target: float, max_iter: int, rng) -> tuple[np.ndarray, bool]:
    n = monic.size - 1
    dp = monic[1:] * np.arange(1, n + 1)
    # start on a circle of the geometric-mean root radius, randomly rotated
    radius = abs(monic[0]) ** (1.0 / n) if monic[0] != 0 else 0.5
    radius = min(max(radius, 1e-3), _root_radius(monic))
    theta0 = rng.uniform(0, 2 * math.pi)
    z = radius * np.exp(1j * (theta0 + 2 * math.pi * np.arange(n) / n + 0.4))
    scale = max(radius, float(np.max(np.abs(z))))
    best_step = math.inf
    stalled = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            pv = poly_eval(monic, z)
            dpv = poly_eval(dp, z)
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            ratio = pv / dpv
            corr = ratio / (1.0 - ratio * inv.sum(axis=1))
            corr = np.where(np.isfinite(corr) & (pv != 0), corr, 0.0)
            z = z - corr
            step = float(np.max(np.abs(corr)))
            if step <= 4 * _EPS * scale:
                break
            # multiple roots only converge to ~eps^(1/k); stop once steps stop shrinking
            if np.all(np.abs(pv) <= target):
                if step < 0.5 * best_step:
                    best_step = step
                    stalled = 0
                else:
                    stalled += 1
                    if stalled >= 20:
                        break
            if np.unique(z).size < n:
                z = z + 1e-12 * scale * rng.standard_normal(n)
    pv = poly_eval(monic, z)
    return z, bool(np.all(np.abs(pv) <= target))


def _newton_deflate(monic: np.ndarray, guesses: np.ndarray, target: float) -> np.ndarray:
    roots = []
    q = monic.copy()
    for g in guesses:
        if q.size <= 1:
            break
        dq = q[1:] * np.arange(1, q.size)
        z = complex(g)
        for _ in range(200):
            v = poly_eval(q, z)
            d = poly_eval(dq, z)
            if d == 0 or abs(v) <= target * 1e-3:
                break
            z -= v / d
        # polish against the full polynomial
        dm = monic[1:] * np.arange(1, monic.size)
        for _ in range(5):
            v = poly_eval(monic, z)
            d = poly_eval(dm, z)
            if d == 0 or abs(v) <= target * 1e-3:
                break
            z_new = z - v / d
            if abs(poly_eval(monic, z_new)) >= abs(v):
                break
            z = z_new
        roots.append(z)
        # synthetic division by (t - z), descending order
        desc = q[::-1]
        out = np.empty(desc.size - 1, dtype=np.complex128)
        acc = 0j
        for i in range(desc.size - 1):
            acc = acc * z + desc[i]
            out[i] = acc
        q = out[::-1]
    return np.array(roots, dtype=np.complex128)


def poly_roots(p, tol: float = 1e-12, max_iter: int = 500, seed: int = DEFAULT_SEED) -> np.ndarray:
    """All roots of ``p`` (ascending coefficients) repeated by multiplicity.

    Every returned root satisfies |p(root)| <= tol * (1 + max|coeff|) for the
    monic normalization of ``p``. Exact zero roots are factored out first so
    that nilpotent characteristic polynomials give exact zeros.

    Raises NonConvergence if the residual target is not met.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = _trim(np.asarray(p, dtype=np.complex128).ravel())
    if p.size < 2:
        raise ValueError("polynomial must have degree >= 1")
    monic = p / p[-1]
    nzero = int(np.flatnonzero(monic != 0)[0])
    monic = monic[nzero:]
    zeros = np.zeros(nzero, dtype=np.complex128)
    if monic.size == 1:
        return zeros
    target = tol * (1.0 + np.max(np.abs(monic)))
    n = monic.size - 1
    if n == 1:
        return np.concatenate([zeros, [-monic[0]]])
    rng = np.random.default_rng(seed)
    z, ok = _aberth(monic, target, max_iter, rng)
    if not ok:
        z = _newton_deflate(monic, z, target)
        ok = z.size == n and bool(np.all(np.abs(poly_eval(monic, z)) <= target))
    if not ok:
        worst = float(np.max(np.abs(poly_eval(monic, z)))) if z.size else math.inf
        raise NonConvergence(f"root residual {worst:.3e} above target {target:.3e}")
    return np.concatenate([zeros, z])


def eigenvalues(A, tol: float = 1e-12) -> np.ndarray:
    """Eigenvalues of ``A`` as roots of its characteristic polynomial."""
    return poly_roots(charpoly(A), tol=tol)


def spectral_radius(A) -> float:
    return float(np.max(np.abs(eigenvalues(A))))


# ---------------------------------------------------------------------------
# spectral structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenInfo:
    value: complex
    alg_mult: int
    geo_mult: int
    min_mult: int


@dataclass(frozen=True)
class SpectralData:
    eigen: tuple[EigenInfo, ...]
    tol: float

    @property
    def n(self) -> int:
        return sum(e.alg_mult for e in self.eigen)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigen], dtype=np.complex128)

    @property
    def radius(self) -> float:
        return float(max(abs(e.value) for e in self.eigen))

    def multiset(self) -> np.ndarray:
        """Eigenvalues repeated by algebraic multiplicity."""
        return np.concatenate([[e.value] * e.alg_mult for e in self.eigen]).astype(np.complex128)


def numerical_rank(M, tol: float = DEFAULT_TOL, reference: float | None = None) -> int:
    """Number of singular values above tol * reference.

    ``reference`` defaults to the largest singular value of ``M``.
    """
    sv = np.linalg.svd(np.asarray(M, dtype=np.complex128), compute_uv=False)
    ref = sv[0] if reference is None else reference
    if sv.size == 0 or ref == 0:
        return 0
    return int(np.sum(sv > tol * ref))


def _merge_radius(k: int, scale: float) -> float:
    # spread of a k-fold root under coefficient rounding is ~ (eps * scale)^(1/k)
    return 10.0 * (1e-15 * scale) ** (1.0 / k)


def _cluster_roots(roots: np.ndarray, tol: float, scale: float) -> list[np.ndarray]:
    groups: list[list[complex]] = []
    for z in sorted(roots, key=lambda w: (w.real, w.imag)):
        for g in groups:
            if min(abs(z - w) for w in g) <= tol:
                g.append(z)
                break
        else:
            groups.append([z])
    # single-linkage closure
    merged = True
    while merged:
        merged = False
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                if min(abs(a - b) for a in groups[i] for b in groups[j]) <= tol:
                    groups[i].extend(groups.pop(j))
                    merged = True
                    break
            if merged:
                break
    # merge clusters that together look like one multiple root smeared by rounding
    while len(groups) > 1:
        best = None
        centers = [np.mean(g) for g in groups]
        for i in range(len(groups)):
            order = sorted((j for j in range(len(groups)) if j != i), key=lambda j: abs(centers[j] - centers[i]))
            members = [i]
            for j in order:
                members.append(j)
                pts = np.concatenate([groups[m] for m in members])
                spread = float(np.max(np.abs(pts - pts.mean())))
                if spread <= _merge_radius(pts.size, scale):
                    key = (-pts.size, spread)
                    if best is None or key < best[0]:
                        best = (key, list(members))
        if best is None:
            break
        members = sorted(best[1])
        merged = [z for m in members for z in groups[m]]
        groups = [g for k, g in enumerate(groups) if k not in members] + [merged]
    return [np.array(g, dtype=np.complex128) for g in groups]


def _refine_cluster(p: np.ndarray, group: np.ndarray) -> complex:
    """Value of a k-fold root, as the simple root of p^(k-1) nearest the centroid."""
    c = complex(group.mean())
    k = group.size
    if k == 1:
        return complex(group[0])
    q = np.polynomial.polynomial.polyder(p, k - 1)
    dq = np.polynomial.polynomial.polyder(q)
    z = c
    for _ in range(30):
        d = poly_eval(dq, z)
        if d == 0:
            break
        step = poly_eval(q, z) / d
        z -= step
        if abs(step) <= 4 * _EPS * max(1.0, abs(z)):
            break
    radius = float(np.max(np.abs(group - c)))
    return complex(z) if abs(z - c) <= 10 * radius + 1e-12 else c


def clustered_roots(p, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Roots of ``p`` with each numerically multiple root replaced by its refined value."""
    p = _trim(np.asarray(p, dtype=np.complex128).ravel())
    roots = poly_roots(p)
    scale = 1.0 + float(np.max(np.abs(p / p[-1])))
    groups = _cluster_roots(roots, tol, scale)
    return np.concatenate([[_refine_cluster(p, g)] * g.size for g in groups]).astype(np.complex128)


def _multiplicities(M: np.ndarray, lam: complex, alg: int, tol: float) -> tuple[int, int]:
    n = M.shape[0]
    N = M - lam * np.eye(n)
    norm = max(float(np.linalg.norm(N, 2)), float(np.linalg.norm(M, 2)))
    if norm == 0:
        return alg, 1
    N = N / norm
    # powers are judged against ||N||^k = 1, not against their own top singular value
    ranks = [numerical_rank(N, tol, reference=1.0)]
    P = N
    k = 1
    while k < n:
        P = P @ N
        ranks.append(numerical_rank(P, tol, reference=1.0))
        if ranks[k] == ranks[k - 1]:
            break
        k += 1
    geo = min(max(n - ranks[0], 1), alg)
    min_mult = min(max(k, 1), alg)
    return geo, min_mult


def spectral_data(A, tol: float = DEFAULT_TOL, declared: Sequence[tuple[complex, int]] | None = None) -> SpectralData:
    """Eigenvalues of ``A`` with algebraic, geometric and minimal-polynomial multiplicities.

    ``declared`` is an optional list of ``(value, alg_mult)`` pairs giving the
    exact spectrum of a matrix built by construction; clustering is then
    skipped and the declared values are used for the rank computations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_matrix(A)
    n = M.shape[0]
    if declared is not None:
        declared = [(complex(v), int(k)) for v, k in declared]
        if sum(k for _, k in declared) != n:
            raise ValueError("declared multiplicities must sum to n")
        clusters = [(v, k) for v, k in declared]
    else:
        cp = charpoly(M)
        roots = poly_roots(cp)
        scale = 1.0 + float(np.max(np.abs(cp)))
        groups = _cluster_roots(roots, tol, scale)
        centers = [_refine_cluster(cp, g) for g in groups]
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                d = abs(centers[i] - centers[j])
                if tol <= d <= 10 * tol:
                    raise AmbiguousClustering(
                        f"eigenvalue clusters {centers[i]:.6g} and {centers[j]:.6g} are {d:.2e} apart"
                    )
        clusters = [(complex(c), g.size) for c, g in zip(centers, groups)]
    eigen = []
    for lam, alg in clusters:
        geo, mm = _multiplicities(M, lam, alg, tol)
        eigen.append(EigenInfo(value=lam, alg_mult=alg, geo_mult=geo, min_mult=mm))
    return SpectralData(eigen=tuple(eigen), tol=tol)


def krylov_matrix(A, v) -> np.ndarray:
    """Columns v, Av, ..., A^(n-1) v."""
    M = as_matrix(A)
    n = M.shape[0]
    K = np.empty((n, n), dtype=np.complex128)
    K[:, 0] = v
    for i in range(1, n):
        K[:, i] = M @ K[:, i - 1]
    return K


def _random_vector(n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def is_cyclic(A, tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED,
              declared: Sequence[tuple[complex, int]] | None = None) -> bool:
    """True iff every eigenvalue of ``A`` has geometric multiplicity one.

    The rank-based answer is cross-checked against the rank of a Krylov
    matrix built from one seeded random vector; disagreement raises
    AmbiguousClustering.
    """
    M = as_matrix(A)
    n = M.shape[0]
    sd = spectral_data(M, tol, declared)
    by_rank = all(e.geo_mult == 1 for e in sd.eigen)
    K = krylov_matrix(M, _random_vector(n, seed))
    norms = np.linalg.norm(K, axis=0)
    if np.any(norms == 0):
        by_krylov = False
    else:
        by_krylov = numerical_rank(K / norms, tol) == n
    if by_rank != by_krylov:
        raise AmbiguousClustering(
            f"cyclicity undecided: rank test says {by_rank}, Krylov test says {by_krylov}"
        )
    return by_rank


def companion(s) -> np.ndarray:
    """Frobenius companion matrix C with sigma(C) = s.

    Ones on the subdiagonal and the negated monic coefficients in the last
    column, so that ``e_1`` is a cyclic vector with Krylov basis the identity.
    """
    s = np.asarray(s, dtype=np.complex128).ravel()
    n = s.size
    a = charpoly_from_sigma(s)
    C = np.zeros((n, n), dtype=np.complex128)
    C[np.arange(1, n), np.arange(n - 1)] = 1.0
    C[:, n - 1] = -a[:n]
    return C


def mobius_matrix(lam: complex, M) -> np.ndarray:
    """The spectral-ball automorphism M -> (lam I - M)(I - conj(lam) M)^(-1)."""
    lam = complex(lam)
    if abs(lam) >= 1:
        raise ValueError("mobius parameter must lie in the open unit disc")
    M = as_matrix(M)
    n = M.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    D = eye - np.conj(lam) * M
    if np.linalg.cond(D) > 1e12:
        raise Singular("I - conj(lam) M is numerically singular; M is outside the spectral ball")
    # X D = (lam I - M)  <=>  D^T X^T = (lam I - M)^T
    return np.linalg.solve(D.T, (lam * eye - M).T).T


def mobius_scalar(lam: complex, z):
    """Scalar disc automorphism z -> (lam - z) / (1 - conj(lam) z); an involution."""
    return (lam - z) / (1 - np.conj(lam) * z)


def in_spectral_ball(A, margin: float = 0.0) -> bool:
    """True iff r(A) < 1 and r(A) <= 1 - margin."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    r = spectral_radius(A)
    return r < 1.0 and r <= 1.0 - margin


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def matrix_to_json(A) -> dict:
    M = as_matrix(A)
    return {"n": M.shape[0], "re": M.real.tolist(), "im": M.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        n = int(obj["n"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from None
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError(f"matrix JSON declares n={n} but entries have shape {re.shape}")
    return as_matrix(re + 1j * im)
