"""Feasible sets (boxes and Euclidean balls) with exact projections.

Only shapes with closed-form projections are supported, so downstream
ratio/regret checks never inherit inner-projection error.
"""

from __future__ import annotations

import numpy as np

__all__ = ["as_point", "Domain", "Box", "Ball", "domain_from_json"]


def as_point(p, dim: int | None = None, name: str = "point") -> np.ndarray:
    """Validate and return a 1-D float array with finite entries."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and arr.size != dim:
        raise ValueError(f"{name} has dimension {arr.size}, expected {dim}")
    return arr


class Domain:
    """Bounded convex feasible set with exact projection and known diameter."""

    dimension: int

    def project(self, p) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def contains(self, p, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def max_distance_to(self, p) -> float:
        """Largest distance from `p` to any feasible point."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one uniform feasible point."""
        raise NotImplementedError

    def project_many(self, X: np.ndarray) -> np.ndarray:
        """Project each row of an (n, d) array."""
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-axis (lower, upper) bounds enclosing the set."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def check_point(self, p, name: str = "point") -> np.ndarray:
        return as_point(p, dim=self.dimension, name=name)


class Box(Domain):
    """Axis-aligned box with per-coordinate lower/upper bounds."""

    def __init__(self, lower, upper):
        self.lower = as_point(lower, name="lower")
        self.upper = as_point(upper, dim=self.lower.size, name="upper")
        if np.any(self.lower > self.upper):
            raise ValueError("box is empty: lower > upper on some axis")
        self.dimension = self.lower.size

    def project(self, p) -> np.ndarray:
        p = self.check_point(p)
        return np.clip(p, self.lower, self.upper)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return (self.lower + self.upper) / 2.0

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = self.check_point(p)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def max_distance_to(self, p) -> float:
        p = self.check_point(p)
        far = np.maximum(np.abs(p - self.lower), np.abs(self.upper - p))
        return float(np.linalg.norm(far))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def project_many(self, X: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(X, dtype=float), self.lower, self.upper)

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()

    def to_json(self) -> dict:
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Ball(Domain):
    """Euclidean ball given by center and radius."""

    def __init__(self, center, radius):
        self._center = as_point(center, name="center")
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        self.dimension = self._center.size

    def project(self, p) -> np.ndarray:
        p = self.check_point(p)
        delta = p - self._center
        dist = float(np.linalg.norm(delta))
        # a hair of slack keeps re-projection of boundary points exactly fixed
        if dist <= self.radius * (1.0 + 1e-12) or dist == 0.0:
            return p.copy()
        return self._center + delta * (self.radius / dist)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def center(self) -> np.ndarray:
        return self._center.copy()

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = self.check_point(p)
        return bool(np.linalg.norm(p - self._center) <= self.radius + tol)

    def max_distance_to(self, p) -> float:
        p = self.check_point(p)
        return float(np.linalg.norm(p - self._center)) + self.radius

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        d = self.dimension
        direction = rng.standard_normal(d)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            return self._center.copy()
        r = self.radius * rng.uniform() ** (1.0 / d)
        return self._center + direction * (r / norm)

    def project_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        delta = X - self._center
        dist = np.linalg.norm(delta, axis=-1, keepdims=True)
        scale = np.ones_like(dist)
        outside = dist[:, 0] > self.radius * (1.0 + 1e-12)
        scale[outside] = self.radius / dist[outside]
        return self._center + delta * scale

    def bounding_box(self):
        return self._center - self.radius, self._center + self.radius

    def to_json(self) -> dict:
        return {"kind": "ball", "center": self._center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball(center={self._center.tolist()}, radius={self.radius})"


def domain_from_json(rec: dict) -> Domain:
    """Build a domain from its JSON record (`{"kind": "box"|"ball", ...}`)."""
    if not isinstance(rec, dict) or "kind" not in rec:
        raise ValueError("domain record must be an object with a 'kind' field")
    kind = rec["kind"]
    if kind == "box":
        required = {"lower", "upper"}
    elif kind == "ball":
        required = {"center", "radius"}
    else:
        raise ValueError(f"unknown domain kind: {kind!r}")
    extra = set(rec) - required - {"kind"}
    if extra:
        raise ValueError(f"unknown domain key: {sorted(extra)[0]}")
    missing = required - set(rec)
    if missing:
        raise ValueError(f"missing domain key: {sorted(missing)[0]}")
    if kind == "box":
        return Box(rec["lower"], rec["upper"])
    return Ball(rec["center"], rec["radius"])
