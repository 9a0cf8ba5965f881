"""Per-round hitting-cost families and the two movement penalties.

Families store their minimizer explicitly, so per-round minimization is a
projection rather than a solver call, and the growth-class inequalities hold
with equality by construction (making ratio experiments sharp).
"""

from __future__ import annotations

import numpy as np

from .geometry import Domain, as_point

__all__ = [
    "L2",
    "HALF_SQUARED_L2",
    "SWITCHING_KINDS",
    "switch_cost",
    "CostFunction",
    "PolyhedralCost",
    "QuadraticCost",
    "GeneralQuadraticCost",
    "cost_from_json",
    "verify_class",
    "gradient_bound",
]

L2 = "l2"
HALF_SQUARED_L2 = "half-squared-l2"
SWITCHING_KINDS = (L2, HALF_SQUARED_L2)


def switch_cost(kind: str, x, y) -> float:
    """Movement penalty between consecutive decisions."""
    x = as_point(x)
    y = as_point(y, dim=x.size, name="second point")
    dist = float(np.linalg.norm(x - y))
    if kind == L2:
        return dist
    if kind == HALF_SQUARED_L2:
        return 0.5 * dist * dist
    raise ValueError(f"unknown switching kind: {kind!r}")


class CostFunction:
    """One round's hitting cost: value, subgradient, and stored minimizer."""

    family: str

    def __init__(self, v, c: float = 0.0):
        self.v = as_point(v, name="minimizer")
        self.c = float(c)
        if self.c < 0:
            raise ValueError("offset must be >= 0 (non-negative hitting costs)")
        self.dimension = self.v.size

    @property
    def param(self) -> float:
        raise NotImplementedError

    def value(self, x) -> float:
        raise NotImplementedError

    def values(self, X: np.ndarray) -> np.ndarray:
        """Vectorized `value` over rows of X (used by the grid oracle)."""
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def _check(self, x) -> np.ndarray:
        return as_point(x, dim=self.dimension, name="x")


class PolyhedralCost(CostFunction):
    """Scaled-norm cost alpha * ||x - v|| + c; grows linearly off its minimizer."""

    family = "polyhedral-norm"

    def __init__(self, alpha: float, v, c: float = 0.0):
        super().__init__(v, c)
        self.alpha = float(alpha)
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")

    @property
    def param(self) -> float:
        return self.alpha

    def value(self, x) -> float:
        x = self._check(x)
        return self.alpha * float(np.linalg.norm(x - self.v)) + self.c

    def values(self, X) -> np.ndarray:
        return self.alpha * np.linalg.norm(X - self.v, axis=-1) + self.c

    def subgradient(self, x) -> np.ndarray:
        x = self._check(x)
        delta = x - self.v
        norm = float(np.linalg.norm(delta))
        if norm == 0.0:
            return np.zeros_like(delta)
        return self.alpha * delta / norm

    def to_json(self) -> dict:
        return {"family": self.family, "alpha": self.alpha, "v": self.v.tolist(), "c": self.c}


class QuadraticCost(CostFunction):
    """Isotropic quadratic (lam/2) * ||x - v||^2 + c."""

    family = "quadratic"

    def __init__(self, lam: float, v, c: float = 0.0):
        super().__init__(v, c)
        self.lam = float(lam)
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")

    @property
    def param(self) -> float:
        return self.lam

    def value(self, x) -> float:
        x = self._check(x)
        delta = x - self.v
        return 0.5 * self.lam * float(delta @ delta) + self.c

    def values(self, X) -> np.ndarray:
        delta = X - self.v
        return 0.5 * self.lam * np.sum(delta * delta, axis=-1) + self.c

    def subgradient(self, x) -> np.ndarray:
        x = self._check(x)
        return self.lam * (x - self.v)

    def to_json(self) -> dict:
        return {"family": self.family, "lambda": self.lam, "v": self.v.tolist(), "c": self.c}


class GeneralQuadraticCost(CostFunction):
    """Anisotropic quadratic 0.5 (x-v)' H (x-v) + c with H >= lam * I.

    `lam` is the declared growth rate; the smallest eigenvalue of H must not
    fall below it (checked at construction).
    """

    family = "general-quadratic"

    def __init__(self, H, lam: float, v, c: float = 0.0):
        super().__init__(v, c)
        H = np.asarray(H, dtype=float)
        if H.shape != (self.dimension, self.dimension):
            raise ValueError("curvature matrix shape does not match the minimizer")
        if not np.allclose(H, H.T, atol=1e-10):
            raise ValueError("curvature matrix must be symmetric")
        self.H = 0.5 * (H + H.T)
        self.lam = float(lam)
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")
        eigs = np.linalg.eigvalsh(self.H)
        self.min_eig = float(eigs[0])
        self.max_eig = float(eigs[-1])
        if self.min_eig < self.lam - 1e-9:
            raise ValueError(
                f"smallest curvature eigenvalue {self.min_eig:.6g} is below the "
                f"declared growth rate {self.lam:.6g}"
            )

    @property
    def param(self) -> float:
        return self.lam

    def value(self, x) -> float:
        x = self._check(x)
        delta = x - self.v
        return 0.5 * float(delta @ self.H @ delta) + self.c

    def values(self, X) -> np.ndarray:
        delta = X - self.v
        return 0.5 * np.einsum("...i,ij,...j->...", delta, self.H, delta) + self.c

    def subgradient(self, x) -> np.ndarray:
        x = self._check(x)
        return self.H @ (x - self.v)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "H": self.H.tolist(),
            "lambda": self.lam,
            "v": self.v.tolist(),
            "c": self.c,
        }


_COST_KEYS = {
    "polyhedral-norm": {"family", "alpha", "v", "c"},
    "quadratic": {"family", "lambda", "v", "c"},
    "general-quadratic": {"family", "H", "lambda", "v", "c"},
}


def cost_from_json(rec: dict) -> CostFunction:
    """Build a cost from its JSON record (see the per-family key sets)."""
    if not isinstance(rec, dict) or "family" not in rec:
        raise ValueError("cost record must be an object with a 'family' field")
    family = rec["family"]
    if family not in _COST_KEYS:
        raise ValueError(f"unknown cost family: {family!r}")
    extra = set(rec) - _COST_KEYS[family]
    if extra:
        raise ValueError(f"unknown cost key: {sorted(extra)[0]}")
    c = float(rec.get("c", 0.0))
    if family == "polyhedral-norm":
        return PolyhedralCost(rec["alpha"], rec["v"], c)
    if family == "quadratic":
        return QuadraticCost(rec["lambda"], rec["v"], c)
    return GeneralQuadraticCost(rec["H"], rec["lambda"], rec["v"], c)


def verify_class(f: CostFunction, domain: Domain, n_samples: int, seed: int) -> bool:
    """Check the declared growth inequality at sampled feasible points.

    Polyhedral family: f(x) - f(v) >= alpha * ||x - v||.
    Quadratic families: f(x) - f(v) >= (lam / 2) * ||x - v||^2.
    Deterministic for a given seed; tolerance 1e-9.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    base = f.value(f.v)
    for _ in range(int(n_samples)):
        x = domain.sample(rng)
        gap = f.value(x) - base
        dist = float(np.linalg.norm(x - f.v))
        if isinstance(f, PolyhedralCost):
            required = f.alpha * dist
        else:
            required = 0.5 * f.param * dist * dist
        if gap < required - 1e-9:
            return False
    return True


def gradient_bound(f: CostFunction, domain: Domain) -> float:
    """Upper bound on sup over the domain of the subgradient norm."""
    if isinstance(f, PolyhedralCost):
        return f.alpha
    reach = domain.max_distance_to(f.v)
    if isinstance(f, QuadraticCost):
        return f.lam * reach
    if isinstance(f, GeneralQuadraticCost):
        return f.max_eig * reach
    raise TypeError(f"unsupported cost type: {type(f).__name__}")
