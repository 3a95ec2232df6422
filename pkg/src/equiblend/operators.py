"""Approximation operators: partition blends, piecewise anchor maps,
contraction glues, and pointwise-limit towers.

Every operator produces, for a level n, a two-variable map whose x-behavior
comes from a partition/cover structure and whose values live in a connector
space or contraction target.  Convergence is judged by a tail criterion over
a level schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .connectors import (
    Contraction,
    ConnectorSpace,
    OrderedWeightFamily,
    lambda_sum,
)
from .partitions import AnchoredScheme, CoverCellPartition, SupportBox, disjointify


class PartitionViolationError(ValueError):
    pass


class DiscretenessError(ValueError):
    pass


APPROXIMANT_KINDS = ("lambda_blend", "piecewise_anchor", "contractible_glue", "ambiguous_limit")

TAIL_K = 3


@dataclass(frozen=True)
class BaireTower:
    """A pointwise-limit tower of depth 0, 1 or 2.

    Depth 0 is a single function (``limit_eval``); depth d >= 1 adds
    ``tower(n)``, the depth-(d-1) stage whose limits approximate
    ``limit_eval`` pointwise as n grows.
    """

    depth: int
    limit_eval: Callable
    tower: Callable[[int], "BaireTower"] | None = None

    def __post_init__(self):
        if self.depth not in (0, 1, 2):
            raise ValueError("tower depth must be 0, 1 or 2")
        if self.depth == 0 and self.tower is not None:
            raise ValueError("depth-0 towers carry no stages")
        if self.depth > 0 and self.tower is None:
            raise ValueError(f"depth-{self.depth} tower needs stages")


def _value_gap(a, b) -> float:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return abs(float(a) - float(b))


def tail_check(values: Sequence, target, eps: float, k: int = TAIL_K):
    """Tail criterion: the last k values all sit within eps of the target.

    Returns (passed, gaps, final_gap); eps=0 demands exact agreement.
    """
    values = list(values)
    gaps = tuple(_value_gap(v, target) for v in values)
    if len(values) < k:
        return False, gaps, (gaps[-1] if gaps else float("inf"))
    passed = all(g <= eps for g in gaps[-k:])
    return passed, gaps, gaps[-1]


@dataclass(frozen=True)
class TailReport:
    terms: tuple
    target: object
    gaps: tuple
    passed: bool
    final_gap: float


def tower_tail(t: BaireTower, y, schedule: Sequence[int], eps: float, k_tail: int = TAIL_K) -> TailReport:
    """Evaluate a tower's stages at y along the schedule and compare their
    limits against the tower's own limit under the tail criterion."""
    if t.depth < 1:
        raise ValueError("tower_tail needs a tower of depth >= 1")
    terms = tuple(t.tower(n).limit_eval(y) for n in schedule)
    target = t.limit_eval(y)
    passed, gaps, final_gap = tail_check(terms, target, eps, k_tail)
    return TailReport(terms=terms, target=target, gaps=gaps, passed=passed, final_gap=final_gap)


@dataclass(frozen=True)
class SectionedFunction:
    """A two-variable function with access to its x-sections and optional
    declared regularity towers at anchor points."""

    eval: Callable
    x_section: Callable | None = None
    anchor_regularity: Callable | None = None
    x_continuity_declared: bool = True

    @classmethod
    def from_callable(cls, f, x_continuity_declared: bool = True) -> "SectionedFunction":
        return cls(eval=f, x_continuity_declared=x_continuity_declared)

    def section(self, x):
        if self.x_section is not None:
            return self.x_section(x)
        return lambda y: self.eval(x, y)

    def tower_at(self, x) -> BaireTower | None:
        if self.anchor_regularity is None:
            return None
        return self.anchor_regularity(x)


def lambda_blend(f: SectionedFunction, scheme: AnchoredScheme, z_space: ConnectorSpace, n: int):
    """Level-n blend: at (x, y), connector-sum the anchor sections
    f(anchor(key), y) over the bumps with positive weight at x.

    Weights are the bump values (they sum to 1 within float dust and are
    renormalised); with a single active bump the value is exactly the anchor
    section's value.  Depends only on bumps whose support contains x.
    """
    family = scheme.family(n)

    def term(x, y):
        entries = []
        for key in family.index_keys:
            if family.support_of(key).contains(x):
                w = family.eval(key, x)
                if w > 0.0:
                    entries.append((key, w, f.eval(scheme.anchor(n, key), y)))
        if not entries:
            raise PartitionViolationError(f"no bump is positive at {x!r} (level {n})")
        return lambda_sum(z_space, OrderedWeightFamily(tuple(entries)))

    return term


def anchored_cells(scheme: AnchoredScheme, n: int):
    """Disjointified cells of a scheme level's supports, in key order, with
    the scheme anchors as cell anchors."""
    family = scheme.family(n)
    cover = [(key, family.support_of(key).contains) for key in family.index_keys]
    cells = disjointify(cover)

    def anchor_of(level: int, key):
        return scheme.anchor(level, key)

    metadata = {"scheme_key_of_cell": {key: key for key in family.index_keys}}
    return cells, anchor_of, metadata


def piecewise_anchor(f: SectionedFunction, cells, anchor_of_cell, n: int):
    """Level-n anchor map: at (x, y), take the unique cell holding x and
    return the anchor's section value f(anchor(cell), y)."""
    part: CoverCellPartition = cells(n) if callable(cells) else cells

    def term(x, y):
        key = part.cell_of(x)
        return f.eval(anchor_of_cell(n, key), y)

    return term


@dataclass(frozen=True)
class GlueBump:
    """One bump of a discrete glue: weight function, y-section, and the
    declared support of the weight."""

    phi: Callable[[object], float]
    section: Callable
    support: SupportBox


def contractible_glue(c: Contraction, bumps: Sequence[GlueBump], x, y):
    """Glue sections along a contraction: inside the (unique) bump support
    holding x the value is gamma(section(y), 1 - phi(x)); outside all
    supports it is the contraction's star point.

    Two supports containing x violate discreteness and raise.
    """
    hits = [b for b in bumps if b.support.contains(x)]
    if len(hits) > 1:
        raise DiscretenessError(f"{len(hits)} bump supports overlap at {x!r}")
    if not hits:
        return c.star
    bump = hits[0]
    w = float(bump.phi(x))
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"bump weight {w!r} outside [0, 1]")
    return c.gamma(bump.section(y), 1.0 - w)


@dataclass(frozen=True)
class AmbiguousCell:
    """Per-cell data for a limit over an ambiguous cover: an increasing core
    exhaustion inside shrinking-complement weight supports, plus a depth-1
    tower approximating the cell's section.

    ``phi(n, x)`` must be exactly 1.0 on ``core_region(n)`` and exactly 0.0
    outside ``u_region(n)``; cores increase with n and their union is the
    cell's ambiguity set.
    """

    key: tuple
    phi: Callable[[int, object], float]
    u_region: Callable[[int], SupportBox]
    core_region: Callable[[int], SupportBox]
    tower: BaireTower

    def __post_init__(self):
        if self.tower.depth != 1:
            raise ValueError("ambiguous cells carry depth-1 towers")


def ambiguous_limit(c: Contraction, cells: Sequence[AmbiguousCell], n: int):
    """Level-n term of the glued limit: inside the unique u-region holding x,
    gamma(g_n(y), 1 - phi_n(x)) with g_n the cell tower's stage-n limit;
    outside all u-regions, the star point."""

    def term(x, y):
        hits = [cell for cell in cells if cell.u_region(n).contains(x)]
        if len(hits) > 1:
            raise DiscretenessError(f"{len(hits)} cell regions overlap at {x!r} (level {n})")
        if not hits:
            return c.star
        cell = hits[0]
        w = float(cell.phi(n, x))
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"cell weight {w!r} outside [0, 1]")
        return c.gamma(cell.tower.tower(n).limit_eval(y), 1.0 - w)

    return term


def ambiguous_target(cells: Sequence[AmbiguousCell], n_cap: int = 1024):
    """The pointwise limit: on the cell whose core eventually captures x, the
    cell tower's limit section; undefined (raises) off every cell."""

    def target(x, y):
        for cell in cells:
            if any(cell.core_region(n).contains(x) for n in range(1, n_cap + 1)):
                return cell.tower.limit_eval(y)
        raise PartitionViolationError(f"point {x!r} escapes every cell core up to n_cap={n_cap}")

    return target


@dataclass(frozen=True)
class ApproximantSequence:
    """A level-indexed family of two-variable maps with a kind tag."""

    term: Callable[[int], Callable]
    kind: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in APPROXIMANT_KINDS:
            raise ValueError(f"unknown approximant kind {self.kind!r}")


def blend_sequence(f: SectionedFunction, scheme: AnchoredScheme, z_space: ConnectorSpace) -> ApproximantSequence:
    return ApproximantSequence(
        term=lambda n: lambda_blend(f, scheme, z_space, n),
        kind="lambda_blend",
        metadata={"scheme": scheme.describe()},
    )


def anchored_sequence(f: SectionedFunction, scheme: AnchoredScheme) -> ApproximantSequence:
    def term(n):
        cells, anchor_of, _ = anchored_cells(scheme, n)
        return piecewise_anchor(f, cells, anchor_of, n)

    return ApproximantSequence(term=term, kind="piecewise_anchor", metadata={"scheme": scheme.describe()})


def ambiguous_sequence(c: Contraction, cells: Sequence[AmbiguousCell]) -> ApproximantSequence:
    cells = tuple(cells)
    return ApproximantSequence(
        term=lambda n: ambiguous_limit(c, cells, n),
        kind="ambiguous_limit",
        metadata={"cells": [cell.key for cell in cells]},
    )
