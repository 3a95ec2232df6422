"""Partitions of unity with decidable supports, anchored refinement schemes,
and cover combinatorics on the model line and grid.

Supports are interval/box descriptors with per-axis open/closed flags, so
"x lies in the support" is an exact float comparison rather than a threshold
on the bump value.  Bumps evaluate to exact 0.0 outside their declared
support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .connectors import Key, _as_key


class DenseSetError(RuntimeError):
    pass


class CoverError(ValueError):
    pass


class AnchoringError(ValueError):
    pass


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned box with per-axis closed/open endpoint flags."""

    lo: tuple
    hi: tuple
    closed_lo: tuple
    closed_hi: tuple

    @classmethod
    def interval(cls, lo: float, hi: float, closed_lo: bool = True, closed_hi: bool = True) -> "SupportBox":
        return cls((float(lo),), (float(hi),), (bool(closed_lo),), (bool(closed_hi),))

    @classmethod
    def box(cls, los, his, closed_lo=None, closed_hi=None) -> "SupportBox":
        los = tuple(float(v) for v in los)
        his = tuple(float(v) for v in his)
        d = len(los)
        closed_lo = tuple(True for _ in range(d)) if closed_lo is None else tuple(bool(v) for v in closed_lo)
        closed_hi = tuple(True for _ in range(d)) if closed_hi is None else tuple(bool(v) for v in closed_hi)
        return cls(los, his, closed_lo, closed_hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x) -> bool:
        if len(self.lo) == 1 and isinstance(x, (int, float)):
            v = float(x)
            lo, hi = self.lo[0], self.hi[0]
            if v < lo or (v == lo and not self.closed_lo[0]):
                return False
            return not (v > hi or (v == hi and not self.closed_hi[0]))
        coords = np.atleast_1d(np.asarray(x, dtype=float))
        if coords.size != self.dim:
            return False
        for v, lo, hi, clo, chi in zip(coords, self.lo, self.hi, self.closed_lo, self.closed_hi):
            if v < lo or (v == lo and not clo):
                return False
            if v > hi or (v == hi and not chi):
                return False
        return True

    def meets(self, other: "SupportBox") -> bool:
        """Whether the two boxes share a point (open/closed flags honored)."""
        if self.dim != other.dim:
            return False
        for i in range(self.dim):
            a_lo, a_hi, a_clo, a_chi = self.lo[i], self.hi[i], self.closed_lo[i], self.closed_hi[i]
            b_lo, b_hi, b_clo, b_chi = other.lo[i], other.hi[i], other.closed_lo[i], other.closed_hi[i]
            lo = max(a_lo, b_lo)
            hi = min(a_hi, b_hi)
            if lo > hi:
                return False
            if lo == hi:
                lo_ok = (lo > a_lo or a_clo) and (lo > b_lo or b_clo)
                hi_ok = (hi < a_hi or a_chi) and (hi < b_hi or b_chi)
                if not (lo_ok and hi_ok):
                    return False
        return True


@dataclass(frozen=True)
class BumpFamily:
    """An indexed family of bumps with declared supports.

    ``eval(key, x)`` is exactly 0.0 whenever x falls outside
    ``support_of(key)``; families here are finite, so local finiteness holds
    with the whole space as witness neighborhood.
    """

    index_keys: tuple
    eval: Callable[[Key, object], float]
    support_of: Callable[[Key], SupportBox]
    space_kind: str  # "euclidean_grid" | "sorgenfrey" | "abstract"

    def active_keys(self, x) -> list:
        return [k for k in self.index_keys if self.support_of(k).contains(x)]

    def weights_at(self, x) -> list:
        """(key, bump value) over supports containing x, in key order."""
        return [(k, self.eval(k, x)) for k in self.active_keys(x)]

    def partition_sum(self, x) -> float:
        return float(sum(v for _, v in self.weights_at(x)))

    def keys_meeting(self, region: SupportBox) -> list:
        """Keys whose supports intersect the region (finiteness witness)."""
        return [k for k in self.index_keys if self.support_of(k).meets(region)]


@dataclass(frozen=True)
class DenseSet:
    """A countable dense set given operationally: pick one of its points
    inside any nonempty region."""

    tag: str
    pick: Callable[[SupportBox], object]


def _coarsest_dyadic_in(lo: float, hi: float, closed_lo: bool, closed_hi: bool, max_level: int = 60) -> float:
    q = 1.0
    for _ in range(max_level + 1):
        p = math.ceil(lo * q)
        v = p / q
        if v < lo or (v == lo and not closed_lo):
            p += 1
            v = p / q
        if v < hi or (v == hi and closed_hi):
            return v
        q *= 2.0
    raise DenseSetError(f"no dyadic point found in [{lo}, {hi}] within {max_level} refinement levels")


def dyadic_dense() -> DenseSet:
    """Dyadic rationals p/2^k, picked deterministically: coarsest level first,
    then smallest numerator."""

    def pick(region: SupportBox):
        coords = [
            _coarsest_dyadic_in(region.lo[i], region.hi[i], region.closed_lo[i], region.closed_hi[i])
            for i in range(region.dim)
        ]
        if region.dim == 1:
            return coords[0]
        return np.array(coords, dtype=float)

    return DenseSet(tag="dyadic", pick=pick)


def dense_from_iterable(points: Iterable, tag: str = "stream", max_draws: int = 10000) -> DenseSet:
    """Adapt a point stream: draw until one lands in the region, with a
    bounded number of draws."""
    stream: Iterator = iter(points)

    def pick(region: SupportBox):
        for _ in range(max_draws):
            try:
                candidate = next(stream)
            except StopIteration:
                break
            if region.contains(candidate):
                return candidate
        raise DenseSetError(f"stream produced no point in the region within {max_draws} draws")

    return DenseSet(tag=tag, pick=pick)


class AnchoredScheme:
    """A sequence of partitions (level n has scale 1/n), each bump carrying an
    anchor point drawn from a fixed dense set."""

    def __init__(self, n_max: int, space_kind: str, dense_set_tag: str, level_builder, describe: dict):
        if n_max < 1:
            raise ValueError("n_max must be a positive integer")
        self.n_max = int(n_max)
        self.space_kind = space_kind
        self.dense_set_tag = dense_set_tag
        self._build_level = level_builder
        self._describe = dict(describe)
        self._levels: dict = {}  # lazily built; idempotent, safe to race

    def level(self, n: int):
        n = int(n)
        if not 1 <= n <= self.n_max:
            raise ValueError(f"level {n} outside 1..{self.n_max}")
        if n not in self._levels:
            self._levels[n] = self._build_level(n)
        return self._levels[n]

    def family(self, n: int) -> BumpFamily:
        return self.level(n)[0]

    def anchor(self, n: int, key):
        anchors = self.level(n)[1]
        return anchors[_as_key(key)]

    def anchor_map(self, n: int) -> Mapping:
        return dict(self.level(n)[1])

    def describe(self) -> dict:
        return dict(self._describe)


def grid_scheme(dim: int, box, dense_points: DenseSet | Iterable | None = None, n_max: int = 8) -> AnchoredScheme:
    """Multilinear tent partitions on the mesh-(1/n) grid over a box.

    The box side length must be a whole number so every mesh tiles it exactly.
    Tent supports are the two adjacent mesh cells per axis, declared
    left-closed/right-open (closing at the box's top face), so any point lies
    in at most 2^dim supports.  Each node's anchor is a dense-set point within
    1/(2n) of the node.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be >= 1")
    lo, hi = float(box[0]), float(box[1])
    side = hi - lo
    if not side > 0:
        raise ValueError("box must have positive side length")
    if abs(side - round(side)) > 1e-9:
        raise ValueError("box side length must be a whole number so meshes tile it exactly")
    side = int(round(side))
    if dense_points is None:
        dense = dyadic_dense()
    elif isinstance(dense_points, DenseSet):
        dense = dense_points
    else:
        dense = dense_from_iterable(dense_points)

    def build_level(n: int):
        h = 1.0 / n
        count = side * n  # nodes 0..count per axis
        axis_nodes = [lo + j / n for j in range(count + 1)]

        def node_of(key):
            return tuple(axis_nodes[j] for j in key)

        keys = [()]
        for _ in range(dim):
            keys = [k + (j,) for k in keys for j in range(count + 1)]
        keys = tuple(sorted(keys))

        def support_of(key):
            los, his, clo, chi = [], [], [], []
            for c in node_of(key):
                a = max(c - h, lo)
                b = c + h
                closed_hi = b >= hi
                los.append(a)
                his.append(min(b, hi))
                clo.append(True)
                chi.append(closed_hi)
            return SupportBox(tuple(los), tuple(his), tuple(clo), tuple(chi))

        def eval_bump(key, x) -> float:
            if not support_of(key).contains(x):
                return 0.0
            coords = np.atleast_1d(np.asarray(x, dtype=float))
            value = 1.0
            for v, c in zip(coords, node_of(key)):
                value *= max(0.0, 1.0 - n * abs(v - c))
            return float(value)

        family = BumpFamily(
            index_keys=keys,
            eval=eval_bump,
            support_of=support_of,
            space_kind="euclidean_grid",
        )
        anchors = {}
        r = 0.5 * h
        for key in keys:
            node = node_of(key)
            region = SupportBox.box(
                [max(c - r, lo) for c in node],
                [min(c + r, hi) for c in node],
            )
            picked = dense.pick(region)
            anchors[key] = float(picked) if dim == 1 else np.atleast_1d(np.asarray(picked, dtype=float))
        return family, anchors

    describe = {
        "kind": "grid",
        "dim": dim,
        "box": [lo, hi],
        "n_max": int(n_max),
        "dense_set": dense.tag,
    }
    return AnchoredScheme(n_max, "euclidean_grid", dense.tag, build_level, describe)


def sorgenfrey_scheme(
    dense_points: DenseSet | Iterable | None = None,
    n_max: int = 8,
    i_range: tuple | None = None,
    domain=(0.0, 1.0),
) -> AnchoredScheme:
    """Characteristic-function partitions of the half-open tiling
    [(i-1)/n, i/n), anchored one tile to the right: the level-n anchor for
    tile i is a dense point of [i/n, (i+1)/n)."""
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ValueError("domain must have positive length")
    if dense_points is None:
        dense = dyadic_dense()
    elif isinstance(dense_points, DenseSet):
        dense = dense_points
    else:
        dense = dense_from_iterable(dense_points)

    def build_level(n: int):
        if i_range is not None:
            i_lo, i_hi = int(i_range[0]), int(i_range[1])
        else:
            i_lo = math.floor(lo * n) - 1
            i_hi = math.ceil(hi * n) + 1
        keys = tuple((i,) for i in range(i_lo, i_hi + 1))

        def support_of(key):
            (i,) = key
            return SupportBox.interval((i - 1) / n, i / n, closed_lo=True, closed_hi=False)

        def eval_bump(key, x) -> float:
            return 1.0 if support_of(key).contains(x) else 0.0

        family = BumpFamily(
            index_keys=keys,
            eval=eval_bump,
            support_of=support_of,
            space_kind="sorgenfrey",
        )
        anchors = {}
        for key in keys:
            (i,) = key
            region = SupportBox.interval(i / n, (i + 1) / n, closed_lo=True, closed_hi=False)
            anchors[key] = float(dense.pick(region))
        return family, anchors

    describe = {
        "kind": "sorgenfrey",
        "domain": [lo, hi],
        "n_max": int(n_max),
        "dense_set": dense.tag,
    }
    if i_range is not None:
        describe["i_range"] = [int(i_range[0]), int(i_range[1])]
    return AnchoredScheme(n_max, "sorgenfrey", dense.tag, build_level, describe)


def _anchor_in_neighborhood(space_kind: str, anchor, x, radius: float) -> bool:
    if space_kind == "sorgenfrey":
        return x <= anchor < x + radius
    diff = np.atleast_1d(np.asarray(anchor, dtype=float)) - np.atleast_1d(np.asarray(x, dtype=float))
    return float(np.linalg.norm(diff)) < radius


def verify_anchoring(scheme: AnchoredScheme, x, radius: float) -> int:
    """Least n0 such that for every n in [n0, n_max], all bumps whose support
    contains x have their anchor inside the radius-neighborhood of x
    (metric ball, or [x, x+radius) on the half-open line)."""
    radius = float(radius)
    if not radius > 0:
        raise ValueError("radius must be positive")
    ok = []
    for n in range(1, scheme.n_max + 1):
        family = scheme.family(n)
        good = all(
            _anchor_in_neighborhood(scheme.space_kind, scheme.anchor(n, key), x, radius)
            for key in family.active_keys(x)
        )
        ok.append(good)
    n0 = None
    for n in range(scheme.n_max, 0, -1):
        if not ok[n - 1]:
            break
        n0 = n
    if n0 is None:
        raise AnchoringError(f"anchoring fails at every tail up to n_max={scheme.n_max}")
    return n0


def pointwise_finiteness(families: Sequence[BumpFamily], x) -> int:
    """Largest number of supports containing x across the families."""
    families = list(families)
    if not families:
        raise ValueError("need at least one family")
    return max(len(f.active_keys(x)) for f in families)


@dataclass(frozen=True)
class CoverCellPartition:
    """Pairwise-disjoint indexed cells; each covered point lies in exactly one."""

    cells: tuple  # ((key, membership predicate), ...)
    provenance: str  # "disjointified" | "supplied"

    def cell_of(self, x):
        hits = [key for key, member in self.cells if member(x)]
        if len(hits) == 1:
            return hits[0]
        if not hits:
            raise CoverError(f"point {x!r} lies in no cell")
        raise CoverError(f"point {x!r} lies in {len(hits)} cells: {hits!r}")

    def keys(self) -> tuple:
        return tuple(key for key, _ in self.cells)


def disjointify(cover: Sequence) -> CoverCellPartition:
    """First-containing-index refinement of an ordered cover: cell k keeps the
    points of set k not claimed by any earlier set."""
    items = [(_as_key(key), member) for key, member in cover]
    if not items:
        raise CoverError("cover is empty")
    cells = []
    for idx, (key, member) in enumerate(items):
        earlier = tuple(m for _, m in items[:idx])

        def cell_member(x, _member=member, _earlier=earlier):
            return bool(_member(x)) and not any(m(x) for m in _earlier)

        cells.append((key, cell_member))
    return CoverCellPartition(tuple(cells), "disjointified")


def supplied_partition(cells: Sequence) -> CoverCellPartition:
    items = tuple((_as_key(key), member) for key, member in cells)
    if not items:
        raise CoverError("partition is empty")
    return CoverCellPartition(items, "supplied")


def _region_contains(region, x) -> bool:
    if isinstance(region, SupportBox):
        return region.contains(x)
    return bool(region(x))


@dataclass(frozen=True)
class QuarterStratReport:
    converges: tuple  # one bool per probe

    @property
    def all_converge(self) -> bool:
        return all(self.converges)


def quarter_strat_check(g, convergence_oracle, probes: Sequence) -> QuarterStratReport:
    """Validate the stratification hypothesis and report convergence.

    ``g(n, x_n)`` is an open-set descriptor (SupportBox or predicate) that
    must contain the probe's limit point x for every n; a violation raises.
    The oracle then decides whether each witness sequence converges to x.
    """
    results = []
    for index, (x, seq) in enumerate(probes):
        seq = list(seq)
        for n, x_n in enumerate(seq, start=1):
            region = g(n, x_n)
            if not _region_contains(region, x):
                raise CoverError(f"probe {index}: limit point escapes g({n}, x_{n}) membership")
        results.append(bool(convergence_oracle(seq, x)))
    return QuarterStratReport(tuple(results))


def tail_convergence_oracle(eps: float = 1e-9, k: int = 3, mode: str = "euclidean"):
    """Finite-window convergence surrogate: the last k terms sit within eps of
    the limit (one-sided on the half-open line)."""

    def oracle(seq, x) -> bool:
        if len(seq) < k:
            return False
        tail = seq[-k:]
        if mode == "sorgenfrey":
            return all(x <= s and s - x <= eps for s in tail)
        return all(
            float(np.linalg.norm(np.atleast_1d(np.asarray(s, dtype=float)) - np.atleast_1d(np.asarray(x, dtype=float)))) <= eps
            for s in tail
        )

    return oracle
