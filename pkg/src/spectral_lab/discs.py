"""Polynomial analytic discs into G_n and matrix-valued discs into Omega_n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gn_geometry import max_root_modulus


@dataclass(frozen=True, eq=False)
class AnalyticDisc:
    """zeta -> (phi_1(zeta), ..., phi_n(zeta)) with polynomial coordinates.

    ``coeffs[i, k]`` is the coefficient of zeta^k in phi_(i+1).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValueError("coeffs must have shape (n, degree + 1)")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, s, degree: int = 0) -> "AnalyticDisc":
        s = np.asarray(s, dtype=np.complex128).ravel()
        c = np.zeros((s.size, degree + 1), dtype=np.complex128)
        c[:, 0] = s
        return cls(c)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def __call__(self, zeta):
        z = np.asarray(zeta, dtype=np.complex128)
        powers = z[..., None] ** np.arange(self.degree + 1)
        return powers @ self.coeffs.T

    def derivative_at_zero(self, i: int, k: int) -> complex:
        """k-th derivative of coordinate ``i`` (0-based) at the origin."""
        if k > self.degree:
            return 0j
        return complex(math.factorial(k) * self.coeffs[i, k])

    def membership_margin(self, grid: int = 256, radius: float = 1.0) -> float:
        """1 - (largest root modulus of phi(zeta)) over ``grid`` points of |zeta| = radius.

        Each point goes through the scalar root finder, independently of the
        vectorized route used inside the optimizer.
        """
        zeta = radius * np.exp(2j * math.pi * np.arange(grid) / grid)
        return 1.0 - max(max_root_modulus(p) for p in self(zeta))

    def to_json(self) -> dict:
        return {"n": self.n, "degree": self.degree,
                "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "AnalyticDisc":
        try:
            re = np.array(obj["re"], dtype=float)
            im = np.array(obj.get("im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed disc JSON: {exc}") from None
        if re.shape != im.shape or re.ndim != 2 or re.shape[0] != int(obj.get("n", re.shape[0])):
            raise ValueError("disc JSON coefficient arrays are inconsistent")
        return cls(re + 1j * im)


@dataclass(frozen=True, eq=False)
class MatrixDisc:
    """A matrix-valued map on the disc, given pointwise."""

    n: int
    func: Callable[[complex], np.ndarray]
    description: str = ""

    def __call__(self, zeta) -> np.ndarray:
        return self.func(complex(zeta))
