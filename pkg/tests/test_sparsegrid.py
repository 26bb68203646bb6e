"""Tests for sparse-grid enumeration, combination coefficients, and evaluation."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from _oracles import random_downward_closed, sparse_eval_bruteforce
from sllg.indexset import ZERO, IndexSet, MultiIndex, new_grid_points
from sllg.interp1d import NodeFamily1D
from sllg.sparsegrid import (
    ORIGIN,
    GridPoint,
    SamplerError,
    build_interpolant,
    combination_coeffs,
    enumerate_grid,
    evaluate,
    evaluate_many,
    load_samples,
    metadata_csv,
    save_samples,
)

FAM2 = NodeFamily1D(p=2, sigma2=5.0)
FAM3 = NodeFamily1D(p=3, sigma2=5.0)


def e(*dims):
    entries = {}
    for d in dims:
        entries[d] = entries.get(d, 0) + 1
    return MultiIndex(entries)


def iset(*members):
    return IndexSet([ZERO, *members])


# ---------------------------------------------------------------------------
# grid points


def test_gridpoint_identity_and_order():
    a = GridPoint([(0, Fraction(1, 2))])
    b = GridPoint([(0, Fraction(1, 2))])
    assert a == b and hash(a) == hash(b)
    assert GridPoint([(0, Fraction(0))]) == ORIGIN  # zeros dropped
    assert ORIGIN < a
    assert a.max_dim == 0 and ORIGIN.max_dim == -1


def test_gridpoint_coords():
    pt = GridPoint([(2, Fraction(1, 2))])
    assert pt.coord(FAM2, 2) == pytest.approx(1.50820493, abs=1e-8)
    assert pt.coord(FAM2, 0) == 0.0
    arr = pt.to_array(FAM2, 4)
    assert arr.shape == (4,)
    assert arr[2] == pytest.approx(1.50820493, abs=1e-8)


def test_gridpoint_line_roundtrip():
    pt = GridPoint([(0, Fraction(-3, 4)), (5, Fraction(1, 8))])
    assert pt.to_line() == "0:-3/4,5:1/8"
    assert GridPoint.from_line(pt.to_line()) == pt
    assert GridPoint.from_line("") == ORIGIN


def test_gridpoint_validation():
    with pytest.raises(ValueError):
        GridPoint([(0, Fraction(1, 2)), (0, Fraction(1, 4))])
    with pytest.raises(ValueError):
        GridPoint([(0, Fraction(3, 2))])


# ---------------------------------------------------------------------------
# enumeration


def test_enumerate_trivial_grid():
    assert enumerate_grid(IndexSet([ZERO]), FAM2) == {ORIGIN}


def test_enumerate_single_axis():
    pts = enumerate_grid(iset(e(0)), FAM2)
    assert len(pts) == 3
    vals = sorted(pt.coord(FAM2, 0) for pt in pts)
    assert vals[1] == 0.0
    assert vals[2] == pytest.approx(1.50820493, abs=1e-8)
    assert vals[0] == pytest.approx(-1.50820493, abs=1e-8)


def test_enumerate_cross():
    pts = enumerate_grid(iset(e(0), e(1)), FAM2)
    assert len(pts) == 5  # two 3-point axes sharing the origin


def test_enumerate_dedup_is_exact():
    # nested levels share nodes; the union must not duplicate them
    lam = iset(e(0), e(0, 0))
    pts = enumerate_grid(lam, FAM2)
    assert len(pts) == 7  # m(2) nodes on one axis
    lam3 = iset(e(0), e(0, 0))
    assert len(enumerate_grid(lam3, FAM3)) == 13  # mains + interval extras


def test_grid_growth_matches_new_point_count():
    rng = np.random.default_rng(4)
    for p, fam in ((2, FAM2), (3, FAM3)):
        for trial in range(12):
            lam = random_downward_closed(rng, int(rng.integers(2, 10)), 4, 3)
            size = len(enumerate_grid(lam, fam))
            expected = sum(new_grid_points(nu, p) for nu in lam)
            assert size == expected
            # per-dimension node tables never exceed the quoted total count
            for nu in lam:
                bound = 1
                for _, l in nu.pairs:
                    bound *= (2 ** (l + 1) - 2) * (p - 1) + 1
                assert new_grid_points(nu, p) <= bound


# ---------------------------------------------------------------------------
# combination coefficients


def test_combo_coeffs_single_axis():
    coeffs = combination_coeffs(iset(e(0)))
    assert coeffs[e(0)] == 1
    assert coeffs[ZERO] == 0


def test_combo_coeffs_sum_to_one():
    rng = np.random.default_rng(11)
    for trial in range(20):
        lam = random_downward_closed(rng, int(rng.integers(1, 14)), 5, 3)
        coeffs = combination_coeffs(lam)
        assert sum(coeffs.values()) == 1


def test_combo_coeffs_interior_vanishes():
    # full square: (0,0) has both forward neighbors inside
    lam = iset(e(0), e(1), e(0, 1))
    coeffs = combination_coeffs(lam)
    assert coeffs == {ZERO: 0, e(0): 0, e(1): 0, e(0, 1): 1}
    # interior of a 2-level chain
    lam2 = iset(e(0), e(0, 0))
    assert combination_coeffs(lam2)[e(0)] == 0


# ---------------------------------------------------------------------------
# interpolant construction and evaluation


def test_constant_set_interpolant():
    interp = build_interpolant(IndexSet([ZERO]), FAM2, lambda pt: 42.0)
    assert evaluate(interp, np.array([1.3, -0.2])) == pytest.approx(42.0)


def test_interpolation_property_random_sets():
    rng = np.random.default_rng(21)
    for trial in range(10):
        lam = random_downward_closed(rng, int(rng.integers(2, 12)), 4, 3)
        values = {}

        def sampler(pt):
            values[pt] = rng.standard_normal()
            return values[pt]

        interp = build_interpolant(lam, FAM2, sampler)
        ys = np.stack([pt.to_array(FAM2, 4) for pt in interp.points])
        out = evaluate_many(interp, ys)
        expected = np.array([values[pt] for pt in interp.points])
        assert np.max(np.abs(out - expected)) < 1e-12


def test_constant_payload_reproduced_everywhere():
    rng = np.random.default_rng(22)
    lam = random_downward_closed(rng, 9, 4, 2)
    interp = build_interpolant(lam, FAM2, lambda pt: 3.5)
    ys = rng.standard_normal((50, 4))
    assert np.allclose(evaluate_many(interp, ys), 3.5, atol=1e-12)


def test_polynomial_reproduction():
    # p=2 grid on a full 2D square of level 1 reproduces multilinear functions
    lam = iset(e(0), e(1), e(0, 1))

    def u(y0, y1):
        return 2.0 + 0.3 * y0 - 1.1 * y1 + 0.7 * y0 * y1

    interp = build_interpolant(lam, FAM2, lambda pt: u(pt.coord(FAM2, 0), pt.coord(FAM2, 1)))
    rng = np.random.default_rng(5)
    ys = rng.uniform(-1.5, 1.5, size=(20, 2))
    expected = np.array([u(*row) for row in ys])
    assert np.allclose(evaluate_many(interp, ys), expected, atol=1e-11)


def test_matches_bruteforce_surplus_sum():
    rng = np.random.default_rng(33)

    def u(coords: dict) -> float:
        y0 = coords.get(0, 0.0)
        y1 = coords.get(1, 0.0)
        y2 = coords.get(2, 0.0)
        return np.sin(y0) + 0.5 * np.cos(y1 * y2) + 0.1 * y0 * y1

    for trial in range(8):
        lam = random_downward_closed(rng, int(rng.integers(2, 9)), 3, 2)
        interp = build_interpolant(lam, FAM2, lambda pt: u(pt.coords(FAM2)))
        for _ in range(4):
            y = rng.standard_normal(3)
            ours = evaluate(interp, y)
            ref = sparse_eval_bruteforce(FAM2, lam, u, {d: y[d] for d in range(3)})
            assert abs(ours - ref) < 1e-10


def test_surplus_via_set_difference():
    # surplus of nu equals the interpolant difference with and without nu
    rng = np.random.default_rng(44)

    def u(coords):
        return np.exp(-sum(v * v for v in coords.values()) / 4.0)

    lam_small = iset(e(0), e(1))
    lam_big = IndexSet(list(lam_small) + [e(0, 1)])
    i_small = build_interpolant(lam_small, FAM2, lambda pt: u(pt.coords(FAM2)))
    i_big = build_interpolant(lam_big, FAM2, lambda pt: u(pt.coords(FAM2)))
    from _oracles import surplus_eval

    for _ in range(6):
        y = rng.standard_normal(2)
        diff = evaluate(i_big, y) - evaluate(i_small, y)
        ref = surplus_eval(FAM2, e(0, 1), u, {0: y[0], 1: y[1]})
        assert abs(diff - ref) < 1e-11


def test_one_dim_box_matches_interpolate_1d():
    from sllg.interp1d import interpolate_1d, make_nodes

    L = 3
    lam = IndexSet([ZERO] + [MultiIndex({0: l}) for l in range(1, L + 1)])
    u = lambda t: np.sin(1.7 * t) + t
    interp = build_interpolant(lam, FAM2, lambda pt: u(pt.coord(FAM2, 0)))
    nodes = make_nodes(FAM2, L)
    t = np.linspace(-4, 4, 41)
    direct = interpolate_1d(FAM2, nodes, u(nodes.points), t)
    ours = evaluate_many(interp, t[:, None])
    assert np.allclose(ours, direct, atol=1e-12)


def test_payload_linearity():
    rng = np.random.default_rng(55)
    lam = iset(e(0), e(1), e(0, 1), e(0, 0))
    pts = sorted(enumerate_grid(lam, FAM2))
    u1 = {pt: rng.standard_normal(3) for pt in pts}
    u2 = {pt: rng.standard_normal(3) for pt in pts}
    ia = build_interpolant(lam, FAM2, lambda pt: u1[pt])
    ib = build_interpolant(lam, FAM2, lambda pt: u2[pt])
    iab = build_interpolant(lam, FAM2, lambda pt: 2.0 * u1[pt] + u2[pt])
    ys = rng.standard_normal((10, 2))
    assert np.allclose(
        evaluate_many(iab, ys),
        2.0 * evaluate_many(ia, ys) + evaluate_many(ib, ys),
        atol=1e-12,
    )


def test_sampler_cache_reused():
    calls = []

    def sampler(pt):
        calls.append(pt)
        return 1.0

    cache: dict = {}
    build_interpolant(iset(e(0)), FAM2, sampler, cache=cache)
    assert len(calls) == 3
    build_interpolant(iset(e(0), e(1)), FAM2, sampler, cache=cache)
    assert len(calls) == 5  # only the two new axis points sampled


def test_sampler_error_carries_point():
    def sampler(pt):
        if pt != ORIGIN:
            raise RuntimeError("boom")
        return 0.0

    with pytest.raises(SamplerError) as exc:
        build_interpolant(iset(e(0)), FAM2, sampler)
    assert exc.value.grid_point != ORIGIN


def test_query_dimension_handling():
    interp = build_interpolant(iset(e(0)), FAM2, lambda pt: pt.coord(FAM2, 0))
    # missing columns are zeros; extra columns are ignored
    assert evaluate(interp, np.zeros(0)) == pytest.approx(0.0)
    assert evaluate(interp, np.array([0.5, 99.0, -7.0])) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# persistence and metadata


def test_metadata_csv_shape():
    import csv
    import io

    from sllg.indexset import index_from_line

    lam = iset(e(0), e(1), e(0, 1))
    interp = build_interpolant(lam, FAM2, lambda pt: 0.0)
    text = metadata_csv(interp)
    lines = text.strip().split("\n")
    assert lines[0] == "multi_index,coefficient,new_points"
    assert len(lines) == 1 + len(lam)
    # multi-dimension cells carry commas and must stay one parsed field
    parsed = list(csv.reader(io.StringIO(text)))
    assert all(len(row) == 3 for row in parsed)
    assert {index_from_line(row[0]) for row in parsed[1:]} == set(lam)


def test_samples_roundtrip(tmp_path):
    rng = np.random.default_rng(66)
    lam = iset(e(0), e(1), e(0, 1))
    payloads = {}

    def sampler(pt):
        payloads[pt] = rng.standard_normal((4, 3))
        return payloads[pt]

    interp = build_interpolant(lam, FAM2, sampler)
    path = tmp_path / "samples.bin"
    save_samples(path, interp, meta={"mesh_n": 8, "steps": 4})
    samples, meta = load_samples(path)
    assert meta == {"mesh_n": 8, "steps": 4}
    assert set(samples) == set(interp.points)
    for pt, val in samples.items():
        assert np.array_equal(val, interp.samples[pt])
