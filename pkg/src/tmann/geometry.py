"""Metric spaces with a convex-combination map, and a checker for its axioms.

The central abstraction is a triple (X, d, W) where W(x, y, lam) plays the
role of the convex combination (1 - lam) x + lam y.  Four axioms make such a
space hyperbolic in the convexity sense used by fixed-point iteration theory:

    (W1)  d(z, W(x, y, lam)) <= (1 - lam) d(z, x) + lam d(z, y)
    (W2)  d(W(x, y, lam), W(x, y, th)) = |lam - th| d(x, y)
    (W3)  W(x, y, lam) = W(y, x, 1 - lam)
    (W4)  d(W(x, z, lam), W(y, w, lam)) <= (1 - lam) d(x, y) + lam d(z, w)

Normed spaces satisfy all four exactly with the affine combination.  Metric
trees satisfy them with the arc-length parametrization of geodesics; the star
tree below is the simplest genuinely nonlinear instance.

``check_w_axioms`` samples random tuples and records the worst violation of
each axiom plus three standard consequences: the distances from a combination
to its endpoints scale linearly in lam, and two comparison inequalities for
combinations with distinct or shared endpoints.  ``BrokenEuclideanSpace``
interpolates with lam**2 instead of lam and serves as the negative control
the checker must flag.

All spaces are immutable after construction and every operation is pure, so
instances can be shared freely across concurrent runs.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any

import numpy as np

Point = Any
"""Instance-specific point representation: ``np.ndarray`` for Euclidean
spaces, ``TreePoint`` for star trees."""


@dataclass(frozen=True)
class TreePoint:
    """Point on a star tree: a ray index and a radial coordinate t >= 0.

    The origin (t == 0) belongs to every ray; it canonicalizes to ray 0 so
    that point equality is decidable.
    """

    ray: int
    t: float

    def __post_init__(self) -> None:
        if self.ray < 0:
            raise ValueError(f"ray index must be >= 0, got {self.ray}")
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"radial coordinate must be finite and >= 0, got {self.t}")
        if self.t == 0.0 and self.ray != 0:
            object.__setattr__(self, "ray", 0)


class Space(ABC):
    """A metric together with a convex-combination map and a point sampler."""

    name: str = "space"

    @abstractmethod
    def dist(self, x: Point, y: Point) -> float:
        """Distance between two points."""

    @abstractmethod
    def combine(self, x: Point, y: Point, lam: float) -> Point:
        """The combination W(x, y, lam), read as (1 - lam) x + lam y."""

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> Point:
        """Draw a point uniformly from the configured bounded region."""

    @staticmethod
    def _check_lambda(lam: float) -> float:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"combination parameter must lie in [0, 1], got {lam}")
        return float(lam)


class EuclideanSpace(Space):
    """R^dim with the norm distance and the affine combination.

    Sampling is uniform over the box [-box_radius, box_radius]^dim.
    """

    def __init__(self, dim: int, box_radius: float = 5.0):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        if not box_radius > 0:
            raise ValueError(f"box_radius must be > 0, got {box_radius}")
        self.dim = int(dim)
        self.box_radius = float(box_radius)
        self.name = f"euclidean-{self.dim}d"

    def as_point(self, coords) -> np.ndarray:
        p = coords if isinstance(coords, np.ndarray) else np.asarray(coords, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"expected a point of shape ({self.dim},), got {p.shape}")
        return p

    def validate_point(self, coords) -> np.ndarray:
        p = np.array(self.as_point(coords), dtype=float)
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        return p

    def dist(self, x, y) -> float:
        return float(np.linalg.norm(self.as_point(x) - self.as_point(y)))

    def combine(self, x, y, lam):
        lam = self._check_lambda(lam)
        return (1.0 - lam) * self.as_point(x) + lam * self.as_point(y)

    def sample(self, rng):
        return rng.uniform(-self.box_radius, self.box_radius, size=self.dim)


class BrokenEuclideanSpace(EuclideanSpace):
    """Euclidean space with a deliberately wrong combination map.

    Interpolates with lam**2 instead of lam.  Negative control for the axiom
    checker: the distance from x to the combination comes out lam**2 d(x, y)
    rather than lam d(x, y), so the endpoint and (W2) checks must flag it.
    """

    def __init__(self, dim: int, box_radius: float = 5.0):
        super().__init__(dim, box_radius)
        self.name = f"euclidean-{self.dim}d-broken"

    def combine(self, x, y, lam):
        lam = self._check_lambda(lam)
        return (1.0 - lam * lam) * self.as_point(x) + (lam * lam) * self.as_point(y)


class StarTreeSpace(Space):
    """Finitely many rays glued at a common origin, with the path metric.

    Distances: |s - t| between (i, s) and (i, t) on the same ray, and s + t
    across distinct rays.  The geodesic between points on distinct rays runs
    through the origin; ``combine`` walks the requested fraction of its
    length starting from the first point.  This is an R-tree, hence CAT(0),
    so the combination axioms hold exactly up to rounding.

    Sampling draws a uniform ray index and a uniform radius in [0, max_radius].
    """

    def __init__(self, num_rays: int = 3, max_radius: float = 5.0):
        if num_rays < 2:
            raise ValueError(f"need at least 2 rays, got {num_rays}")
        if not max_radius > 0:
            raise ValueError(f"max_radius must be > 0, got {max_radius}")
        self.num_rays = int(num_rays)
        self.max_radius = float(max_radius)
        self.name = f"star-tree-{self.num_rays}"

    def as_point(self, p) -> TreePoint:
        if not isinstance(p, TreePoint):
            raise ValueError(f"expected a TreePoint, got {type(p).__name__}")
        if p.ray >= self.num_rays:
            raise ValueError(f"ray index {p.ray} out of range for {self.num_rays} rays")
        return p

    validate_point = as_point

    def dist(self, x, y) -> float:
        x = self.as_point(x)
        y = self.as_point(y)
        if x.ray == y.ray:
            return abs(x.t - y.t)
        return x.t + y.t

    def combine(self, x, y, lam):
        lam = self._check_lambda(lam)
        x = self.as_point(x)
        y = self.as_point(y)
        if x.ray == y.ray:
            return TreePoint(x.ray, max(0.0, x.t + lam * (y.t - x.t)))
        walked = lam * (x.t + y.t)
        if walked <= x.t:
            return TreePoint(x.ray, x.t - walked)
        return TreePoint(y.ray, walked - x.t)

    def sample(self, rng):
        ray = int(rng.integers(self.num_rays))
        return TreePoint(ray, float(rng.uniform(0.0, self.max_radius)))


#: Checks performed by ``check_w_axioms``, in report order.
AXIOM_CHECKS = (
    "metric_symmetry",
    "metric_identity",
    "metric_triangle",
    "W1",
    "W2",
    "W3",
    "W4",
    "endpoint_distances",
    "two_parameter_comparison",
    "shared_endpoint_comparison",
)


@dataclass(frozen=True)
class AxiomReport:
    """Worst observed violation per axiom over the sampled tuples.

    Equalities (W2, W3, endpoint distances) record the absolute deviation;
    inequalities record the signed excess of the left side over the right,
    so a negative entry means the inequality held with margin.
    """

    space: str
    samples: int
    tol: float
    max_violation: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.max_violation.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.max_violation.items() if v > self.tol]

    def summary(self) -> str:
        lines = [f"axiom check on {self.space}: {self.samples} samples, tol {self.tol!r}"]
        for key in AXIOM_CHECKS:
            v = self.max_violation[key]
            status = "ok" if v <= self.tol else "VIOLATED"
            lines.append(f"  {key:<28} max violation {v: .3e}  {status}")
        return "\n".join(lines)


def check_w_axioms(
    space: Space,
    samples: int,
    tol: float = 1e-9,
    rng: np.random.Generator | None = None,
    seed: int = 0,
) -> AxiomReport:
    """Sample random tuples (x, y, z, w, lam, th) and check every axiom.

    Returns the per-check worst violation; the report passes when every
    entry stays at or below ``tol``.  Check failures never raise, they are
    carried in the report.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if rng is None:
        rng = np.random.default_rng(seed)

    worst = {key: -math.inf for key in AXIOM_CHECKS}

    def record(key: str, value: float) -> None:
        if value > worst[key]:
            worst[key] = value

    for _ in range(samples):
        x, y, z, w = (space.sample(rng) for _ in range(4))
        lam, th = rng.uniform(0.0, 1.0, size=2)

        dxy = space.dist(x, y)
        dzw = space.dist(z, w)
        cxy_l = space.combine(x, y, lam)
        cxy_t = space.combine(x, y, th)

        record("metric_symmetry", abs(dxy - space.dist(y, x)))
        record("metric_identity", space.dist(x, x))
        record("metric_triangle", space.dist(x, z) - (dxy + space.dist(y, z)))

        record("W1", space.dist(z, cxy_l) - ((1 - lam) * space.dist(z, x) + lam * space.dist(z, y)))
        record("W2", abs(space.dist(cxy_l, cxy_t) - abs(lam - th) * dxy))
        record("W3", space.dist(cxy_l, space.combine(y, x, 1.0 - lam)))

        cxz_l = space.combine(x, z, lam)
        record("W4", space.dist(cxz_l, space.combine(y, w, lam)) - ((1 - lam) * dxy + lam * dzw))

        record(
            "endpoint_distances",
            max(
                abs(space.dist(x, cxy_l) - lam * dxy),
                abs(space.dist(y, cxy_l) - (1 - lam) * dxy),
            ),
        )
        record(
            "two_parameter_comparison",
            space.dist(cxz_l, space.combine(y, w, th))
            - ((1 - lam) * dxy + lam * dzw + abs(lam - th) * space.dist(y, w)),
        )
        record(
            "shared_endpoint_comparison",
            space.dist(cxz_l, space.combine(x, w, th))
            - (lam * dzw + abs(lam - th) * space.dist(x, w)),
        )

    return AxiomReport(space=space.name, samples=samples, tol=tol, max_violation=dict(worst))
