from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class RunConfig:
    """Numerical knobs shared by the bound engines, certificates and CLI.

    ``degree=None`` means twice the dimension of the problem. ``margin`` is the
    certificate margin; disc membership uses its own, much smaller margin.
    """

    tol: float = 1e-7
    grid: int = 4096
    degree: int | None = None
    restarts: int = 32
    seed: int = 42
    margin: float = 1e-4
    output: str = "json"
    directions: int = 1000

    def __post_init__(self):
        if self.tol <= 0 or self.margin <= 0:
            raise ValueError("tol and margin must be positive")
        if self.grid < 1 or self.grid & (self.grid - 1):
            raise ValueError("grid must be a positive power of two")
        if self.degree is not None and self.degree < 1:
            raise ValueError("degree must be positive")
        if self.restarts < 1 or self.directions < 1:
            raise ValueError("restarts and directions must be positive")
        if self.output not in ("json", "table"):
            raise ValueError("output must be 'json' or 'table'")

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def degree_for(self, n: int) -> int:
        return self.degree if self.degree is not None else 2 * n
