"""Connector calculus on concrete model spaces.

A connector space is a point universe together with a continuous path map
``connect(x, y, t)`` joining any two points for t in [0, 1], with exact
endpoints and ``connect(x, x, t) == x``.  Weighted n-point combinations are
folded through ``connect`` by a fixed left-to-right recursion; ordered weight
families and Monte-Carlo hull probes build on top of that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

Point = "float | np.ndarray"
Key = tuple

# validation slack before weights are renormalised
WEIGHT_ATOL = 1e-9


class WeightError(ValueError):
    pass


class FamilyError(ValueError):
    pass


def _points_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return bool(np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))
    return a == b


def _norm_metric(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class ConnectorSpace:
    """A point universe with a two-point path map.

    ``connect(x, y, t)`` must return x at t=0, y at t=1 and x whenever the
    endpoints coincide; built-in constructors wrap the raw map so those
    identities hold exactly in floats.
    """

    point_dim: int
    contains: Callable[[Point], bool]
    connect: Callable[[Point, Point, float], Point]
    metric: Callable[[Point, Point], float]
    locally_convex_declared: bool = True
    name: str = ""


def _with_endpoint_identities(raw):
    def connect(x, y, t):
        if not 0.0 <= t <= 1.0:
            raise WeightError(f"connector parameter {t!r} outside [0, 1]")
        if t == 0.0:
            return x
        if t == 1.0:
            return y
        if _points_equal(x, y):
            return x
        return raw(x, y, t)

    return connect


def affine_space(lo, hi, dim: int | None = None, name: str = "") -> ConnectorSpace:
    """Straight-line connector on a closed box, (1-t)x + t y.

    ``lo``/``hi`` are scalars applied to every axis.  Membership allows 1e-9
    slack for rounding drift at the box faces.
    """
    lo = float(lo)
    hi = float(hi)
    if not hi > lo:
        raise ValueError("affine_space needs hi > lo")
    d = 1 if dim is None else int(dim)

    def contains(p) -> bool:
        arr = np.atleast_1d(np.asarray(p, dtype=float))
        if arr.size != d:
            return False
        return bool(np.all(arr >= lo - 1e-9) and np.all(arr <= hi + 1e-9))

    def raw(x, y, t):
        return (1.0 - t) * x + t * y

    return ConnectorSpace(
        point_dim=d,
        contains=contains,
        connect=_with_endpoint_identities(raw),
        metric=_norm_metric,
        locally_convex_declared=True,
        name=name or f"affine[{lo},{hi}]^{d}",
    )


def affine_line(dim: int = 1, name: str = "") -> ConnectorSpace:
    """Unbounded straight-line connector (all finite points)."""
    d = int(dim)

    def contains(p) -> bool:
        arr = np.atleast_1d(np.asarray(p, dtype=float))
        return arr.size == d and bool(np.all(np.isfinite(arr)))

    def raw(x, y, t):
        return (1.0 - t) * x + t * y

    return ConnectorSpace(
        point_dim=d,
        contains=contains,
        connect=_with_endpoint_identities(raw),
        metric=_norm_metric,
        locally_convex_declared=True,
        name=name or f"affine_line^{d}",
    )


def _h(u: float) -> float:
    return u * u * u + u


def _h_inv(w: float) -> float:
    # u^3 + u - w = 0 has a single real root (discriminant is always negative)
    s = math.sqrt(0.25 * w * w + 1.0 / 27.0)
    u = float(np.cbrt(0.5 * w + s) + np.cbrt(0.5 * w - s))
    for _ in range(2):  # Newton polish to machine precision
        u -= (u * u * u + u - w) / (3.0 * u * u + 1.0)
    return u


def warped_line(name: str = "warped_line") -> ConnectorSpace:
    """Connector on the real line pulled back through h(u) = u^3 + u.

    ``connect(x, y, t) = h^-1((1-t) h(x) + t h(y))``; h is strictly increasing
    so the inverse is well defined everywhere.
    """

    def contains(p) -> bool:
        return isinstance(p, (int, float)) and math.isfinite(float(p))

    def raw(x, y, t):
        return _h_inv((1.0 - t) * _h(float(x)) + t * _h(float(y)))

    return ConnectorSpace(
        point_dim=1,
        contains=contains,
        connect=_with_endpoint_identities(raw),
        metric=lambda a, b: abs(float(a) - float(b)),
        locally_convex_declared=True,
        name=name,
    )


def _clean_weights(values) -> np.ndarray:
    w = np.asarray(values, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise WeightError("weights must be a nonempty 1-d sequence")
    if np.any(w < -WEIGHT_ATOL):
        raise WeightError("negative weight beyond tolerance")
    if np.any(w > 1.0 + WEIGHT_ATOL):
        raise WeightError("weight above 1 beyond tolerance")
    w = np.where(w < 0.0, 0.0, w)
    s = float(w.sum())
    if abs(s - 1.0) > WEIGHT_ATOL:
        raise WeightError(f"weights sum to {s!r}, not 1 within {WEIGHT_ATOL}")
    if s != 1.0:
        w = w / s
    return w


@dataclass(frozen=True)
class SimplexWeights:
    """Nonnegative weights summing to one (renormalised within 1e-9).

    Exact zeros are preserved: renormalisation divides, never shifts, so a
    0.0 entry stays 0.0 and the recursion's zero branch remains reachable.
    """

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _clean_weights(self.weights))

    def __len__(self) -> int:
        return int(self.weights.size)


def _check_point(space: ConnectorSpace, p) -> None:
    size = np.atleast_1d(np.asarray(p, dtype=float)).size
    if size != space.point_dim:
        raise WeightError(f"point of dimension {size} in a {space.point_dim}-dimensional space")


def convex_combination(space: ConnectorSpace, points: Sequence, weights) -> Point:
    """Weighted combination of n points folded through the connector.

    One entry returns its point.  With more entries the first two are merged:
    if w1 + w2 > 0 they collapse to ``connect(x1, x2, w2/(w1+w2))`` carrying
    weight w1 + w2; if w1 + w2 == 0 (exact float test; weights are
    nonnegative, so both are exact zeros) the first entry is dropped.  Exact
    zero weights therefore never move the result.
    """
    w = weights.weights if isinstance(weights, SimplexWeights) else _clean_weights(weights)
    pts = list(points)
    if len(pts) != int(w.size):
        raise WeightError(f"{len(pts)} points with {int(w.size)} weights")
    for p in pts:
        _check_point(space, p)
    vals = [float(v) for v in w]
    while len(pts) > 1:
        s = vals[0] + vals[1]
        if s == 0.0:
            pts = pts[1:]
            vals = vals[1:]
        else:
            pts = [space.connect(pts[0], pts[1], vals[1] / s)] + pts[2:]
            vals = [s] + vals[2:]
    return pts[0]


def _as_key(key) -> Key:
    if isinstance(key, tuple):
        if not key or not all(isinstance(k, int) for k in key):
            raise FamilyError(f"keys must be integer tuples, got {key!r}")
        return key
    if isinstance(key, int):
        return (key,)
    raise FamilyError(f"keys must be integers or integer tuples, got {key!r}")


@dataclass(frozen=True)
class OrderedWeightFamily:
    """Finitely many (key, weight, point) entries with strictly increasing keys.

    Keys are integer tuples compared lexicographically; bare integers are
    wrapped as 1-tuples.  Nonzero weights must sum to 1 within 1e-9.
    """

    entries: tuple

    def __post_init__(self):
        cleaned = []
        for key, weight, point in self.entries:
            weight = float(weight)
            if weight < -WEIGHT_ATOL or weight > 1.0 + WEIGHT_ATOL:
                raise WeightError(f"family weight {weight!r} outside [0, 1]")
            cleaned.append((_as_key(key), max(weight, 0.0), point))
        for (a, _, _), (b, _, _) in zip(cleaned, cleaned[1:]):
            if not a < b:
                raise FamilyError(f"keys not strictly increasing: {a!r} then {b!r}")
        total = sum(w for _, w, _ in cleaned if w != 0.0)
        if cleaned and abs(total - 1.0) > WEIGHT_ATOL:
            raise WeightError(f"nonzero family weights sum to {total!r}")
        object.__setattr__(self, "entries", tuple(cleaned))

    def support(self) -> tuple:
        """Entries with nonzero weight, in key order."""
        return tuple(e for e in self.entries if e[1] != 0.0)


def lambda_sum(space: ConnectorSpace, family: OrderedWeightFamily) -> Point:
    """Connector sum of a family: fold the nonzero-weight entries, in key
    order, through :func:`convex_combination`."""
    live = family.support()
    if not live:
        raise FamilyError("family has empty nonzero support")
    pts = [p for _, _, p in live]
    w = SimplexWeights(np.array([wt for _, wt, _ in live]))
    return convex_combination(space, pts, w)


@dataclass(frozen=True)
class Contraction:
    """A map gamma(z, t) sliding every point to ``star`` as t goes 0 -> 1."""

    gamma: Callable[[Point, float], Point]
    star: Point
    name: str = ""


def _with_contraction_identities(raw, star):
    def gamma(z, t):
        if t == 0.0:
            return z
        if t == 1.0:
            return star
        return raw(z, t)

    return gamma


def make_contraction(raw_gamma, star, name: str = "") -> Contraction:
    """Wrap a raw gamma so gamma(z,0)=z and gamma(z,1)=star hold exactly."""
    if not callable(raw_gamma):
        raise TypeError("raw_gamma must be callable")
    return Contraction(gamma=_with_contraction_identities(raw_gamma, star), star=star, name=name)


def straight_line_contraction(star=0.0, name: str = "") -> Contraction:
    """gamma(z, t) = (1-t) z + t star on a euclidean universe."""

    def raw(z, t):
        return (1.0 - t) * z + t * star

    return make_contraction(raw, star, name or "straight_line")


def contraction_from_connector(space: ConnectorSpace, star, name: str = "") -> Contraction:
    """Contract along connector paths: gamma(z, t) = connect(z, star, t)."""

    def raw(z, t):
        return space.connect(z, star, t)

    return make_contraction(raw, star, name or f"contract({space.name})")


def contract_eval(c: Contraction, z, t: float) -> Point:
    """Evaluate a contraction; t must lie in [0, 1]."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise WeightError(f"contraction parameter {t!r} outside [0, 1]")
    return c.gamma(z, t)


@dataclass(frozen=True)
class HullWitness:
    """Outcome of a hull probe.  A positive carries the witnessing data;
    a negative only says the search did not find one (one-sided)."""

    found: bool
    distance: float
    points: tuple | None
    weights: np.ndarray | None
    value: Point | None
    trials: int


def iterated_hull_contains(
    space: ConnectorSpace,
    seed_points: Sequence,
    n: int,
    probe,
    trials: int = 512,
    rng_seed: int = 0,
    tol: float = 1e-9,
    polish_top: int = 5,
) -> HullWitness:
    """Search for an n-fold combination of seeds landing on ``probe``.

    Samples point tuples from the seeds with simplex-uniform weights, then
    polishes the best candidates' weights (SLSQP over the simplex).  Returns
    a positive with a witness when some combination comes within ``tol`` of
    the probe; a negative is only evidence of absence.
    """
    seeds = list(seed_points)
    if not seeds or n < 1:
        raise ValueError("need at least one seed point and n >= 1")
    rng = np.random.default_rng(rng_seed)
    candidates = []
    used = 0
    for _ in range(int(trials)):
        used += 1
        idx = rng.integers(0, len(seeds), size=n)
        pts = [seeds[i] for i in idx]
        w = rng.dirichlet(np.ones(n))
        value = convex_combination(space, pts, w / w.sum())
        dist = space.metric(value, probe)
        if dist <= tol:
            return HullWitness(True, float(dist), tuple(pts), np.asarray(w), value, used)
        candidates.append((float(dist), tuple(pts), np.asarray(w)))
    candidates.sort(key=lambda c: c[0])
    best = HullWitness(False, candidates[0][0], None, None, None, used) if candidates else None

    def polish(pts, w0):
        def objective(v):
            v = np.clip(v, 0.0, None)
            s = float(v.sum())
            if s <= 0.0:
                return 1e9
            out = convex_combination(space, list(pts), v / s)
            return space.metric(out, probe)

        res = minimize(
            objective,
            w0,
            method="SLSQP",
            bounds=[(0.0, 1.0)] * len(pts),
            constraints=[{"type": "eq", "fun": lambda v: float(np.sum(v)) - 1.0}],
            options={"maxiter": 200, "ftol": 1e-16},
        )
        v = np.clip(res.x, 0.0, None)
        s = float(v.sum())
        if s <= 0.0:
            return None
        v = v / s
        out = convex_combination(space, list(pts), v)
        return space.metric(out, probe), v, out

    for dist, pts, w0 in candidates[: max(0, int(polish_top))]:
        polished = polish(pts, w0)
        if polished is None:
            continue
        pdist, pw, pval = polished
        if pdist <= tol:
            return HullWitness(True, float(pdist), tuple(pts), pw, pval, used)
        if best is None or pdist < best.distance:
            best = HullWitness(False, float(pdist), None, None, None, used)
    return best
