"""Lifting analytic discs of G_n through a non-cyclic matrix B.

For nilpotent B in Jordan form the zero columns F0 = {1 = b_1 < ... < b_(n-r)}
determine a degree vector

    d_i = 1 + #(F0 intersected with [n-i+2 .. n]),

and a disc phi into G_n lifts through B at the origin iff phi_i vanishes to
order d_i at 0 (coefficients 0 .. d_i - 1 vanish). The lift is the matrix

    [ 0    f_2   0   ...  0   ]
    [ 0    0     f_3 ...  0   ]
    [ ...               f_n   ]
    [ psi_n psi_(n-1) ... psi_1 ]

with f_j = zeta for j in F0, f_j = 1 otherwise, and
psi_j = (-1)^(j+1) zeta^(1-d_j) phi_j. Its sigma-image is
sigma_i = (-1)^(i+1) psi_i prod_{k=n-i+2}^{n} f_k = phi_i.

Matrices with a single eigenvalue lam reduce to the nilpotent case through
M -> (lam I - M)(I - conj(lam) M)^-1, which is its own inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import conjugation_path
from .discs import AnalyticDisc, MatrixDisc
from .errors import NotCyclic, NotSingleEigenvalue, SpectralLabError, ThetaViolated
from .matrix_core import (DEFAULT_SEED, DEFAULT_TOL, as_matrix, charpoly_from_sigma, is_cyclic,
                          krylov_matrix, mobius_matrix, numerical_rank, sigma, spectral_data)

THETA_TOL = 1e-10


# ---------------------------------------------------------------------------
# normal forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NilpotentJordanForm:
    """Nilpotent Jordan matrix described by its zero columns F0 (1-based)."""

    n: int
    F0: tuple[int, ...]

    def __post_init__(self):
        F0 = tuple(sorted(int(j) for j in self.F0))
        object.__setattr__(self, "F0", F0)
        if not F0 or F0[0] != 1:
            raise ValueError("F0 must contain 1")
        if len(set(F0)) != len(F0) or F0[-1] > self.n:
            raise ValueError("F0 must be a set of indices in [1..n]")
        sizes = self.block_sizes
        if any(b < a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"block sizes {sizes} violate gap monotonicity")

    @classmethod
    def from_block_sizes(cls, sizes) -> "NilpotentJordanForm":
        sizes = sorted(int(s) for s in sizes)
        if any(s < 1 for s in sizes):
            raise ValueError("block sizes must be positive")
        starts = np.cumsum([0] + sizes[:-1]) + 1
        return cls(n=sum(sizes), F0=tuple(int(b) for b in starts))

    @property
    def F1(self) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.n + 1) if j not in self.F0)

    @property
    def r(self) -> int:
        return self.n - len(self.F0)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        edges = list(self.F0) + [self.n + 1]
        return tuple(b - a for a, b in zip(edges, edges[1:]))

    def matrix(self) -> np.ndarray:
        N = np.zeros((self.n, self.n), dtype=np.complex128)
        for j in self.F1:
            N[j - 2, j - 1] = 1.0
        return N


def all_forms(n: int) -> list[NilpotentJordanForm]:
    """Every canonical form of size n (one per partition of n)."""
    def partitions(m, smallest):
        if m == 0:
            yield []
            return
        for k in range(smallest, m + 1):
            for rest in partitions(m - k, k):
                yield [k] + rest
    return [NilpotentJordanForm.from_block_sizes(p) for p in partitions(n, 1)]


def _norm_scale(N: np.ndarray) -> float:
    # matrices here live in the unit spectral ball, so 1 is the natural size floor
    return max(float(np.linalg.norm(N, 2)), 1.0)


def _scaled_powers(N: np.ndarray, tol: float):
    n = N.shape[0]
    M = N / _norm_scale(N)
    powers = [np.eye(n, dtype=np.complex128)]
    ranks = [n]
    while ranks[-1] > 0 and len(powers) <= n:
        powers.append(powers[-1] @ M)
        ranks.append(numerical_rank(powers[-1], tol, reference=1.0))
    return powers, ranks


def _null_basis(M: np.ndarray, dim: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(M)
    return vh.conj().T[:, M.shape[1] - dim:]


def _orth(V: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if V.size == 0:
        return V
    u, sv, _ = np.linalg.svd(V, full_matrices=False)
    return u[:, sv > tol * max(sv[0], 1e-300)]


def nilpotent_normal_form(B, tol: float = DEFAULT_TOL, declared=None):
    """Canonical nilpotent form of a single-eigenvalue matrix B.

    Returns ``(form, P)`` with P^-1 Phi_lam(B) P = form.matrix(), where lam is
    the eigenvalue of B and Phi_lam the spectral-ball automorphism sending it
    to 0. Blocks are ordered by increasing size.
    """
    B = as_matrix(B)
    n = B.shape[0]
    sd = spectral_data(B, tol, declared)
    if len(sd.eigen) != 1:
        raise NotSingleEigenvalue(f"B has {len(sd.eigen)} eigenvalue clusters")
    lam = sd.eigen[0].value
    N = mobius_matrix(lam, B)
    powers, ranks = _scaled_powers(N, tol)
    if ranks[-1] != 0:
        raise SpectralLabError("reduced matrix is not numerically nilpotent")
    p = len(ranks) - 1  # nilpotency index
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, p + 1)] + [0]
    exact = {k: at_least[k - 1] - at_least[k] for k in range(1, p + 1)}
    scale = _norm_scale(N)
    Nmat = N / scale

    chains: dict[int, list[np.ndarray]] = {}
    level_vectors: dict[int, list[np.ndarray]] = {k: [] for k in range(1, p + 1)}
    for k in range(p, 0, -1):
        count = exact.get(k, 0)
        if count == 0:
            continue
        U = _null_basis(powers[k], n - ranks[k])
        V = [_null_basis(powers[k - 1], n - ranks[k - 1])] if k > 1 else []
        V += [np.array(level_vectors[k]).T] if level_vectors[k] else []
        Q = _orth(np.hstack(V)) if V else np.zeros((n, 0))
        Up = U - Q @ (Q.conj().T @ U)
        _, _, vh = np.linalg.svd(Up)
        for y in vh[:count].conj():
            v = U @ y
            chain = [v]
            for _ in range(k - 1):
                chain.append(Nmat @ chain[-1])
            chains.setdefault(k, []).append(chain)
            for depth, w in enumerate(chain):
                if k - depth < k:
                    level_vectors[k - depth].append(w)
    # chains were built with N / scale; undo the scaling so that N p_j = p_(j-1)
    cols = []
    sizes = []
    for k in sorted(chains):
        for chain in chains[k]:
            block = [chain[k - 1 - i] * scale ** (k - 1 - i) for i in range(k)]
            cols.extend(block)
            sizes.append(k)
    form = NilpotentJordanForm.from_block_sizes(sizes)
    P = np.array(cols).T if cols else np.eye(n, dtype=np.complex128)
    err = np.linalg.norm(np.linalg.solve(P, N @ P) - form.matrix())
    if not np.isfinite(err) or err > 1e-6:
        raise SpectralLabError(f"Jordan basis construction failed (residual {err:.2e})")
    return form, P


def degree_vector(form: NilpotentJordanForm) -> tuple[int, ...]:
    """d_i = 1 + #(F0 intersected with [n-i+2 .. n]) for i = 1..n."""
    n = form.n
    return tuple(1 + sum(1 for b in form.F0 if n - i + 2 <= b <= n) for i in range(1, n + 1))


def theta_residuals(phi: AnalyticDisc, form: NilpotentJordanForm) -> list[float]:
    """|phi_i^(k)(0)| for every i and 0 <= k <= d_i - 1, read off the coefficients."""
    if phi.n != form.n:
        raise ValueError("disc and form dimensions differ")
    d = degree_vector(form)
    return [abs(phi.derivative_at_zero(i, k)) for i in range(form.n) for k in range(d[i])]


def theta_holds(phi: AnalyticDisc, form: NilpotentJordanForm, tol: float = THETA_TOL) -> bool:
    return all(r <= tol for r in theta_residuals(phi, form))


# ---------------------------------------------------------------------------
# the lift psi
# ---------------------------------------------------------------------------

def lift_matrix(f_vals, psi_vals) -> np.ndarray:
    """Assemble the lift matrix from f_2..f_n and psi_1..psi_n values."""
    psi_vals = np.asarray(psi_vals, dtype=np.complex128)
    n = psi_vals.size
    M = np.zeros((n, n), dtype=np.complex128)
    for j in range(2, n + 1):
        M[j - 2, j - 1] = f_vals[j - 2]
    M[n - 1, :] = psi_vals[::-1]
    return M


@dataclass(frozen=True, eq=False)
class LiftFunction:
    """f_2..f_n as the constant 1 or the monomial zeta, and psi_1..psi_n as polynomials."""

    n: int
    f: tuple[str, ...]
    psi: np.ndarray  # (n, degree + 1), ascending

    def f_values(self, zeta: complex) -> list[complex]:
        return [zeta if kind == "zeta" else 1.0 for kind in self.f]

    def psi_values(self, zeta: complex) -> np.ndarray:
        return self.psi @ (complex(zeta) ** np.arange(self.psi.shape[1]))

    def matrix(self, zeta: complex) -> np.ndarray:
        return lift_matrix(self.f_values(zeta), self.psi_values(zeta))

    def to_json(self) -> dict:
        return {"f": list(self.f), "psi": [{"re": p.real.tolist(), "im": p.imag.tolist()} for p in self.psi]}

    @classmethod
    def from_json(cls, obj: dict) -> "LiftFunction":
        psi = np.array([np.array(p["re"]) + 1j * np.array(p["im"]) for p in obj["psi"]])
        return cls(n=len(psi), f=tuple(obj["f"]), psi=psi)


def build_lift(phi: AnalyticDisc, form: NilpotentJordanForm) -> LiftFunction:
    """Lift of ``phi`` through the canonical form matrix at the origin."""
    res = theta_residuals(phi, form)
    if any(r > THETA_TOL for r in res):
        raise ThetaViolated(f"derivative conditions fail (max residual {max(res):.2e})")
    n = form.n
    d = degree_vector(form)
    f = tuple("zeta" if j in form.F0 else "1" for j in range(2, n + 1))
    psi = np.zeros((n, phi.degree + 1), dtype=np.complex128)
    for j in range(1, n + 1):
        stripped = phi.coeffs[j - 1, d[j - 1] - 1:]
        psi[j - 1, : stripped.size] = (-1) ** (j + 1) * stripped
    return LiftFunction(n=n, f=f, psi=psi)


def sigma_of_lift(L: LiftFunction, zeta: complex) -> np.ndarray:
    """sigma of the lift matrix from the closed form, without a determinant."""
    n = L.n
    fv = L.f_values(zeta)  # fv[k-2] = f_k
    pv = L.psi_values(zeta)
    out = np.empty(n, dtype=np.complex128)
    for i in range(1, n + 1):
        prod = 1.0 + 0j
        for k in range(n - i + 2, n + 1):
            prod *= fv[k - 2]
        out[i - 1] = (-1) ** (i + 1) * pv[i - 1] * prod
    return out


# ---------------------------------------------------------------------------
# transport of discs by the automorphism of G_n induced by Phi_lam
# ---------------------------------------------------------------------------

def _mobius_numerators(lam: complex, n: int) -> np.ndarray:
    """Rows k: ascending t-coefficients of (-1)^n (lam - t)^k (1 - conj(lam) t)^(n-k)."""
    rows = np.zeros((n + 1, n + 1), dtype=np.complex128)
    for k in range(n + 1):
        p = np.array([1.0 + 0j])
        for _ in range(k):
            p = np.convolve(p, [lam, -1.0])
        for _ in range(n - k):
            p = np.convolve(p, [1.0, -np.conj(lam)])
        rows[k, : p.size] = (-1) ** n * p
    return rows


def mobius_sigma(lam: complex, s) -> np.ndarray:
    """sigma of Phi_lam(M) as a function of s = sigma(M)."""
    s = np.asarray(s, dtype=np.complex128)
    n = s.size
    a = charpoly_from_sigma(s)
    num = a @ _mobius_numerators(lam, n)
    monic = num / num[n]
    return np.array([(-1) ** j * monic[n - j] for j in range(1, n + 1)])


def _series_div(num: np.ndarray, den: np.ndarray, K: int) -> np.ndarray:
    q = np.zeros(K + 1, dtype=np.complex128)
    num = np.pad(num, (0, max(0, K + 1 - num.size)))[: K + 1]
    den = np.pad(den, (0, max(0, K + 1 - den.size)))[: K + 1]
    for k in range(K + 1):
        q[k] = (num[k] - np.dot(den[1:k + 1], q[k - 1::-1][:k])) / den[0]
    return q


def mobius_disc_taylor(lam: complex, phi: AnalyticDisc, K: int) -> AnalyticDisc:
    """Taylor polynomial of order K of zeta -> mobius_sigma(lam, phi(zeta))."""
    n = phi.n
    a = np.zeros((n + 1, phi.degree + 1), dtype=np.complex128)  # a_k(zeta)
    a[n, 0] = 1.0
    for j in range(1, n + 1):
        a[n - j] = (-1) ** j * phi.coeffs[j - 1]
    rows = _mobius_numerators(lam, n)
    num = np.einsum("kz,km->mz", a, rows)  # coefficient of t^m as a zeta-polynomial
    lead = num[n]
    out = np.zeros((n, K + 1), dtype=np.complex128)
    for j in range(1, n + 1):
        out[j - 1] = (-1) ** j * _series_div(num[n - j], lead, K)
    return AnalyticDisc(out)


# ---------------------------------------------------------------------------
# lifting through B and A
# ---------------------------------------------------------------------------

def _two_eigen_n3(B: np.ndarray, tol: float, declared):
    """(lam, B') for n = 3 with eigenvalues {lam, lam, other}, lam of geometric multiplicity 2."""
    sd = spectral_data(B, tol, declared)
    if B.shape[0] != 3 or len(sd.eigen) != 2:
        return None
    double = [e for e in sd.eigen if e.alg_mult == 2]
    if not double or double[0].geo_mult != 2:
        return None
    lam = double[0].value
    return lam, mobius_matrix(lam, B)


def _eigenbasis_01(M: np.ndarray, lam1: complex) -> np.ndarray:
    """Columns: basis of ker M (2 vectors) and an eigenvector for lam1."""
    K = _null_basis(M, 2)
    w = _null_basis(M - lam1 * np.eye(3), 1)
    return np.hstack([K, w])


def _krylov_similarity(src: np.ndarray, dst: np.ndarray, seed: int) -> np.ndarray:
    """S with S src S^-1 = dst, both cyclic with the same characteristic polynomial."""
    n = src.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    Ks = krylov_matrix(src, v)
    Kd = krylov_matrix(dst, v)
    return Kd @ np.linalg.inv(Ks)


def lift_through(B, A, phi: AnalyticDisc, zeta0: complex, tol: float = DEFAULT_TOL,
                 seed: int = DEFAULT_SEED, declared_b=None, samples: int = 64) -> MatrixDisc:
    """Matrix disc Phi with Phi(0) = B, Phi(zeta0) = A and sigma(Phi) = phi.

    B must have a single eigenvalue, or (n = 3) an eigenvalue with a
    two-dimensional eigenspace plus one simple eigenvalue. A must be cyclic.
    The result is verified at the endpoints and at ``samples`` points of
    |zeta| = |zeta0| before it is returned.
    """
    B, A = as_matrix(B), as_matrix(A)
    n = B.shape[0]
    zeta0 = complex(zeta0)
    if zeta0 == 0 or abs(zeta0) >= 1:
        raise ValueError("zeta0 must lie in the punctured unit disc")
    if phi.n != n:
        raise ValueError("disc dimension does not match the matrices")
    res = max(np.max(np.abs(phi(0.0) - sigma(B))), np.max(np.abs(phi(zeta0) - sigma(A))))
    if res > 1e-8:
        raise ValueError(f"phi does not interpolate sigma(B), sigma(A) (residual {res:.2e})")
    if not is_cyclic(A, tol):
        raise NotCyclic("A must be cyclic")

    sd = spectral_data(B, tol, declared_b)
    if len(sd.eigen) == 1:
        lam = sd.eigen[0].value
        form, P = nilpotent_normal_form(B, tol, declared_b)
        d = degree_vector(form)
        taylor = mobius_disc_taylor(lam, phi, n)
        if not theta_holds(taylor, form):
            raise ThetaViolated("disc does not satisfy the derivative conditions at B")
        f_kind = ["zeta" if j in form.F0 else "1" for j in range(2, n + 1)]
        G0 = P
    else:
        two = _two_eigen_n3(B, tol, declared_b)
        if two is None:
            raise NotSingleEigenvalue("B must have one eigenvalue (or n = 3 with a double semisimple one)")
        lam, Bred = two
        d = (1, 2, 3)
        taylor = mobius_disc_taylor(lam, phi, n)
        if abs(taylor.coeffs[1, 0]) > THETA_TOL or abs(taylor.coeffs[2, 0]) > THETA_TOL \
                or abs(taylor.coeffs[2, 1]) > THETA_TOL:
            raise ThetaViolated("need phi_2(0) = phi_3(0) = phi_3'(0) = 0 after reduction")
        f_kind = ["zeta", "zeta"]
        lam1 = taylor.coeffs[0, 0]
        psi0 = lift_matrix([0.0, 0.0], [lam1, -taylor.coeffs[1, 1], taylor.coeffs[2, 2]])
        G0 = _eigenbasis_01(Bred, lam1) @ np.linalg.inv(_eigenbasis_01(psi0, lam1))

    def psi_at(zeta: complex) -> np.ndarray:
        fv = [zeta if k == "zeta" else 1.0 for k in f_kind]
        if zeta == 0:
            vals = [(-1) ** (j + 1) * taylor.coeffs[j - 1, d[j - 1] - 1] for j in range(1, n + 1)]
        else:
            red = mobius_sigma(lam, phi(zeta))
            vals = [(-1) ** (j + 1) * red[j - 1] / zeta ** (d[j - 1] - 1) for j in range(1, n + 1)]
        return lift_matrix(fv, vals)

    A_red = mobius_matrix(lam, A)
    G1 = _krylov_similarity(psi_at(zeta0), A_red, seed)
    G = conjugation_path(G0, G1, zeta0)

    def func(zeta: complex) -> np.ndarray:
        g = G(zeta)
        return mobius_matrix(lam, g @ psi_at(zeta) @ np.linalg.inv(g))

    disc = MatrixDisc(n, func, f"lift through B (F0 pattern {f_kind})")
    scale = 1.0 + max(np.linalg.norm(A), np.linalg.norm(B))
    err = max(np.linalg.norm(disc(0.0) - B), np.linalg.norm(disc(zeta0) - A)) / scale
    pts = abs(zeta0) * np.exp(2j * math.pi * np.arange(samples) / samples)
    err_sigma = max(float(np.max(np.abs(sigma(disc(z)) - phi(z)))) for z in pts)
    if err > 1e-8 or err_sigma > 1e-8:
        raise SpectralLabError(f"lift failed verification (endpoints {err:.2e}, sigma {err_sigma:.2e})")
    return disc
