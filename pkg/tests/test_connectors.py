"""Connector spaces: endpoint identities, weight hygiene, iterated blends."""

from __future__ import annotations

import numpy as np
import pytest

from equiblend.connectors import (
    Contraction,
    FamilyError,
    HullWitness,
    OrderedWeightFamily,
    SimplexWeights,
    WeightError,
    affine_line,
    affine_space,
    contract_eval,
    contraction_from_connector,
    convex_combination,
    iterated_hull_contains,
    lambda_sum,
    make_contraction,
    straight_line_contraction,
    warped_line,
)


def _bits(v) -> bytes:
    return np.asarray(v, dtype=float).tobytes()


def test_endpoint_identities_are_exact():
    rng = np.random.default_rng(11)
    sp = affine_line(3)
    wl = warped_line()
    for _ in range(200):
        x = rng.uniform(-5.0, 5.0, size=3)
        y = rng.uniform(-5.0, 5.0, size=3)
        assert sp.connect(x, y, 0.0) is x
        assert sp.connect(x, y, 1.0) is y
        assert sp.connect(x, x, rng.uniform()) is x
        a, b = rng.uniform(-2.0, 2.0, size=2)
        assert wl.connect(a, b, 0.0) == a
        assert wl.connect(a, b, 1.0) == b
        assert wl.connect(a, a, rng.uniform()) == a


def test_connect_rejects_out_of_range_parameter():
    sp = affine_line(2)
    x = np.zeros(2)
    y = np.ones(2)
    with pytest.raises(WeightError):
        sp.connect(x, y, -0.01)
    with pytest.raises(WeightError):
        sp.connect(x, y, 1.01)


def test_membership_predicates():
    sp = affine_space(-1.0, 1.0, dim=2)
    assert sp.contains(np.array([0.5, -0.5]))
    assert not sp.contains(np.array([1.5, 0.0]))
    wl = warped_line()
    assert wl.contains(123.0)


def test_simplex_weights_validation():
    w = SimplexWeights((0.25, 0.25, 0.5))
    assert sum(w.weights) == 1.0
    with pytest.raises(WeightError):
        SimplexWeights((0.5, 0.6))
    with pytest.raises(WeightError):
        SimplexWeights((-0.2, 1.2))
    # tiny negatives clamp to exact zero, tiny drift renormalizes
    w2 = SimplexWeights((-1e-12, 0.3, 0.7 + 1e-10))
    assert w2.weights[0] == 0.0
    assert sum(w2.weights) == 1.0


def test_affine_combination_matches_weighted_average():
    rng = np.random.default_rng(29)
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        dim = int(rng.integers(1, 4))
        sp = affine_line(dim)
        pts = [rng.uniform(-5.0, 5.0, size=dim) for _ in range(k)]
        raw = rng.uniform(0.1, 1.0, size=k)
        weights = raw / raw.sum()
        out = convex_combination(sp, pts, weights)
        oracle = np.average(np.stack(pts), axis=0, weights=weights)
        assert np.max(np.abs(out - oracle)) <= 1e-12


def test_zero_weight_entries_never_move_the_result():
    rng = np.random.default_rng(37)
    sp = affine_line(2)
    wl = warped_line()
    for _ in range(500):
        k = int(rng.integers(2, 7))
        pts = [rng.uniform(-3.0, 3.0, size=2) for _ in range(k)]
        raw = rng.uniform(0.1, 1.0, size=k)
        weights = list(raw / raw.sum())
        base = convex_combination(sp, pts, weights)
        # splice exact-zero entries at a random slot; result must be bit-identical
        slot = int(rng.integers(0, k + 1))
        pts2 = pts[:slot] + [rng.uniform(-3.0, 3.0, size=2)] + pts[slot:]
        w2 = weights[:slot] + [0.0] + weights[slot:]
        assert _bits(convex_combination(sp, pts2, w2)) == _bits(base)

        vals = [float(rng.uniform(-2.0, 2.0)) for _ in range(k)]
        wbase = convex_combination(wl, vals, weights)
        vals2 = vals[:slot] + [float(rng.uniform(-2.0, 2.0))] + vals[slot:]
        assert convex_combination(wl, vals2, w2) == wbase


def _dyadic_weights(rng, k: int) -> list[float]:
    # weights j/64 with every j >= 1; all partial sums are exact in floats,
    # so no renormalization kicks in anywhere
    while True:
        counts = rng.multinomial(64, [1.0 / k] * k)
        if counts.min() >= 1:
            return [int(c) / 64.0 for c in counts]


def test_combination_recursion_identity():
    # merging the first pair by hand and recursing reproduces the result bit
    # for bit, on the affine space and on the warped line alike
    rng = np.random.default_rng(41)
    sp = affine_line(3)
    wl = warped_line()
    for _ in range(300):
        k = int(rng.integers(3, 7))
        weights = _dyadic_weights(rng, k)
        s = weights[0] + weights[1]

        pts = [rng.uniform(-4.0, 4.0, size=3) for _ in range(k)]
        merged = sp.connect(pts[0], pts[1], weights[1] / s)
        lhs = convex_combination(sp, pts, weights)
        rhs = convex_combination(sp, [merged] + pts[2:], [s] + weights[2:])
        assert _bits(lhs) == _bits(rhs)

        vals = [float(rng.uniform(-2.0, 2.0)) for _ in range(k)]
        vmerged = wl.connect(vals[0], vals[1], weights[1] / s)
        vlhs = convex_combination(wl, vals, weights)
        vrhs = convex_combination(wl, [vmerged] + vals[2:], [s] + weights[2:])
        assert vlhs == vrhs


def test_idempotence_on_repeated_points():
    sp = affine_line(2)
    p = np.array([0.7, -0.3])
    out = convex_combination(sp, [p, p, p, p], [0.1, 0.2, 0.3, 0.4])
    assert out is p
    wl = warped_line()
    assert convex_combination(wl, [1.3, 1.3, 1.3], [0.5, 0.25, 0.25]) == 1.3


def test_warped_connect_parameter_continuity():
    # small parameter changes move the output a little; the warp keeps the
    # displacement bounded on a moderate window
    rng = np.random.default_rng(53)
    wl = warped_line()
    for _ in range(500):
        a, b = rng.uniform(-2.0, 2.0, size=2)
        t = rng.uniform(0.05, 0.95)
        base = wl.connect(a, b, t)
        nudged = wl.connect(a, b, t + 1e-7)
        assert abs(nudged - base) <= 1e-4


def test_warped_midpoint_respects_cubic_pull():
    # the warp h(u) = u^3 + u is convex on [0, inf); midpoints get pulled
    # toward the larger endpoint
    wl = warped_line()
    mid = wl.connect(0.0, 2.0, 0.5)
    assert 1.0 < mid < 2.0
    # h(mid) must be the exact average of h(0) and h(2) up to solver dust
    h = lambda u: u * u * u + u
    assert abs(h(mid) - 0.5 * (h(0.0) + h(2.0))) <= 1e-9


def test_ordered_family_key_discipline():
    p = np.zeros(1)
    with pytest.raises(FamilyError):
        OrderedWeightFamily(entries=(((2,), 0.5, p), ((1,), 0.5, p)))
    with pytest.raises(FamilyError):
        OrderedWeightFamily(entries=(((1,), 0.5, p), ((1,), 0.5, p)))
    fam = OrderedWeightFamily(entries=((1, 0.25, p), (4, 0.75, p)))
    assert [k for k, _, _ in fam.support()] == [(1,), (4,)]


def test_lambda_sum_single_entry_returns_the_point():
    sp = affine_line(2)
    p = np.array([0.1, 0.2])
    fam = OrderedWeightFamily(entries=(((3,), 1.0, p),))
    assert lambda_sum(sp, fam) is p
    with pytest.raises(FamilyError):
        lambda_sum(sp, OrderedWeightFamily(entries=()))


def test_lambda_sum_matches_convex_combination():
    rng = np.random.default_rng(61)
    sp = affine_line(2)
    for _ in range(200):
        k = int(rng.integers(2, 6))
        raw = rng.uniform(0.1, 1.0, size=k)
        weights = raw / raw.sum()
        pts = [rng.uniform(-1.0, 1.0, size=2) for _ in range(k)]
        fam = OrderedWeightFamily(
            entries=tuple(((j,), float(weights[j]), pts[j]) for j in range(k))
        )
        assert _bits(lambda_sum(sp, fam)) == _bits(convex_combination(sp, pts, weights))


def test_contraction_endpoints():
    c = straight_line_contraction()
    assert contract_eval(c, 0.8, 0.0) == 0.8
    assert contract_eval(c, 0.8, 1.0) == 0.0
    assert c.star == 0.0
    with pytest.raises(WeightError):
        contract_eval(c, 0.8, 1.5)

    sp = affine_line(2)
    star = np.array([1.0, -1.0])
    c2 = contraction_from_connector(sp, star)
    z = np.array([0.25, 0.5])
    assert contract_eval(c2, z, 0.0) is z
    assert contract_eval(c2, z, 1.0) is star


def test_make_contraction_validates_callable():
    with pytest.raises(TypeError):
        make_contraction("not callable", 0.0)
    c = make_contraction(lambda z, t: z * (1.0 - t), 0.0, name="fade")
    assert isinstance(c, Contraction)
    assert c.name == "fade"


def test_hull_witness_finds_interior_points():
    sp = affine_line(1)
    seeds = [np.array([0.0]), np.array([1.0])]
    w = iterated_hull_contains(sp, seeds, n=2, probe=np.array([0.5]), trials=128, rng_seed=3)
    assert isinstance(w, HullWitness)
    assert w.found
    assert w.distance <= 1e-9
    assert len(w.points) == len(w.weights)

    miss = iterated_hull_contains(sp, seeds, n=2, probe=np.array([2.0]), trials=128, rng_seed=3)
    assert not miss.found


def test_hull_witness_on_warped_segment():
    wl = warped_line()
    target = wl.connect(0.0, 2.0, 0.37)
    w = iterated_hull_contains(wl, [0.0, 2.0], n=2, probe=target, trials=128, rng_seed=9)
    assert w.found
    assert w.distance <= 1e-9
