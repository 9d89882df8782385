"""Tests for the finite-field brute-force oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leibnizalg.algebra import bind_params, catalog_map, sample_bindings
from leibnizalg.exact import (
    NonInvertibleDenominator,
    NonRealValue,
    RatExpr,
    parse_expr,
)
from leibnizalg.fp import (
    CoverageReport,
    DEFAULT_BUDGET,
    FpMatrix,
    RefusedSize,
    bind_family,
    chart_membership,
    compile_system,
    coverage,
    dual_path_check,
    enumerate_solutions,
    family_solution_set,
    lift_check,
    roundtrip_check,
    solution_indices,
    sweep_shard,
)
from leibnizalg.operators import (
    OperatorFamily,
    load_all_families,
    make_kind,
    verify_family,
)


@pytest.fixture(scope="module")
def cmap():
    return catalog_map()


@pytest.fixture(scope="module")
def families():
    return load_all_families()


@pytest.fixture(scope="module")
def family_index(families):
    return {(f.algebra, f.kind, f.index): f for f in families}


@pytest.fixture(scope="module")
def l1_nij_solutions(cmap):
    return solution_indices(cmap["L1"], make_kind("nijenhuis"), 2)


# ---------------------------------------------------------------------------
# FpMatrix

def test_fpmatrix_little_endian_layout():
    m = FpMatrix.from_index(1, 4, 2)
    assert m.entries[0][0] == 1
    assert sum(sum(row) for row in m.entries) == 1
    m = FpMatrix.from_index(2, 4, 2)
    assert m.entries[0][1] == 1
    # digit t = r*n + c: index p^4 flips entry (1, 0)
    m = FpMatrix.from_index(2 ** 4, 4, 2)
    assert m.entries[1][0] == 1


def test_fpmatrix_validation():
    with pytest.raises(ValueError):
        FpMatrix(4, ((0,),))          # not a prime
    with pytest.raises(ValueError):
        FpMatrix(2, ((0, 2), (0, 1)))  # entry out of range
    with pytest.raises(ValueError):
        FpMatrix(2, ((0, 1),))         # not square


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=3 ** 16 - 1),
       st.sampled_from([2, 3]))
def test_fpmatrix_index_roundtrip(m, p):
    m = m % p ** 16
    assert FpMatrix.from_index(m, 4, p).index() == m


# ---------------------------------------------------------------------------
# sweeping

def test_solution_set_contains_trivial_operators(cmap, l1_nij_solutions):
    sols = set(l1_nij_solutions.tolist())
    assert 0 in sols                                     # zero matrix
    ident = FpMatrix(2, tuple(tuple(int(r == c) for c in range(4))
                              for r in range(4)))
    assert ident.index() in sols                         # identity map
    # identity is not a weight-0 solution on L1
    rb = set(solution_indices(cmap["L1"], make_kind("rota-baxter"),
                              2).tolist())
    assert 0 in rb and ident.index() not in rb


def test_solution_indices_sorted_and_deterministic(cmap, l1_nij_solutions):
    a = l1_nij_solutions
    assert (np.diff(a) > 0).all()
    b = solution_indices(cmap["L1"], make_kind("nijenhuis"), 2)
    assert a.tolist() == b.tolist()


def test_paths_agree_on_examples(cmap):
    for name, kname in (("L17", "rota-baxter"), ("L1", "averaging"),
                        ("L6", "reynolds")):
        report = dual_path_check(cmap[name], make_kind(kname), 2)
        assert report["agree"], report
        assert report["compiled_count"] == report["direct_count"]
        assert report["total"] == 2 ** 16
        assert report["first_disagreement"] is None


def test_sharding_partitions_the_sweep(cmap, l1_nij_solutions):
    kind = make_kind("nijenhuis")
    parts = [solution_indices(cmap["L1"], kind, 2, shard=s)
             for s in range(16)]
    merged = sorted(int(m) for part in parts for m in part.tolist())
    assert merged == l1_nij_solutions.tolist()
    # each shard only holds matrices with its first row
    for s, part in enumerate(parts):
        assert all(int(m) % 16 == s for m in part.tolist())


def test_sweep_shard_worker_matches_inline(cmap, l1_nij_solutions):
    got = []
    for s in range(16):
        got.extend(sweep_shard((None, "L1", {}, "nijenhuis", None, 2, s,
                                DEFAULT_BUDGET, "compiled")))
    assert sorted(got) == l1_nij_solutions.tolist()


def test_sweep_shard_worker_binds_parameters(cmap):
    direct = bind_params(cmap["L4"], {"mu": RatExpr.const(1)})
    want = solution_indices(direct, make_kind("averaging"), 2).tolist()
    got = []
    for s in range(16):
        got.extend(sweep_shard((None, "L4", {"mu": "1"}, "averaging", None,
                                2, s, DEFAULT_BUDGET, "direct")))
    assert sorted(got) == want


def test_budget_refusals(cmap):
    with pytest.raises(RefusedSize):
        solution_indices(cmap["L1"], make_kind("reynolds"), 3)
    with pytest.raises(RefusedSize):
        solution_indices(cmap["L1"], make_kind("reynolds"), 2, budget=100)


def test_sweep_rejects_unbound_table_and_bad_flags(cmap):
    with pytest.raises(ValueError):
        solution_indices(cmap["L4"], make_kind("nijenhuis"), 2)
    with pytest.raises(ValueError):
        solution_indices(cmap["L1"], make_kind("nijenhuis"), 2,
                         path="floating")
    with pytest.raises(ValueError):
        solution_indices(cmap["L1"], make_kind("nijenhuis"), 2, shard=16)
    with pytest.raises(ValueError):
        solution_indices(cmap["L1"], make_kind("nijenhuis"), 4)


def test_nonreducible_tables_are_rejected(cmap):
    # (1+mu)/(1-mu) at mu=5 has an even denominator, so p=2 cannot host it
    table = bind_params(cmap["L20"], {"mu": RatExpr.const(5)})
    with pytest.raises(NonInvertibleDenominator):
        solution_indices(table, make_kind("nijenhuis"), 2, path="compiled")
    with pytest.raises(NonInvertibleDenominator):
        solution_indices(table, make_kind("nijenhuis"), 2, path="direct")
    # but mu = 0 and mu = 2 reduce fine
    for v in (0, 2):
        t = bind_params(cmap["L20"], {"mu": RatExpr.const(v)})
        assert dual_path_check(t, make_kind("nijenhuis"), 2)["agree"]


def test_compile_system_requires_bound_weight(cmap):
    with pytest.raises(ValueError):
        compile_system(cmap["L1"], make_kind("rota-baxter",
                                             RatExpr.var("w")), 2)


def test_compiled_system_shape(cmap):
    cs = compile_system(cmap["L1"], make_kind("averaging"), 2)
    assert cs.equation_count <= 128
    assert all(all(exp <= 3 for _, exp in mono) for mono in cs.monos)
    assert all(0 <= pos < 16 for mono in cs.monos for pos, _ in mono)


def test_enumerate_solutions_yields_matrices(cmap, l1_nij_solutions):
    seq = list(enumerate_solutions(cmap["L1"], make_kind("nijenhuis"), 2))
    assert [m.index() for m in seq] == l1_nij_solutions.tolist()
    assert all(isinstance(m, FpMatrix) and m.p == 2 for m in seq)


# ---------------------------------------------------------------------------
# lifted soundness

def test_lift_check_confirms_solutions(cmap, l1_nij_solutions):
    out = lift_check(cmap["L1"], make_kind("nijenhuis"), 2,
                     l1_nij_solutions.tolist(), samples=40)
    assert out == {"ok": True, "checked": 40, "counterexample": None}


def test_lift_check_flags_non_solutions(cmap):
    ident = FpMatrix(2, tuple(tuple(int(r == c) for c in range(4))
                              for r in range(4))).index()
    out = lift_check(cmap["L1"], make_kind("rota-baxter"), 2, [ident])
    assert not out["ok"] and out["counterexample"] == ident


# ---------------------------------------------------------------------------
# chart membership

def test_membership_respects_fixed_zero_entries(cmap, family_index):
    # first chart keeps entry (1,1) at zero, so no point has it nonzero
    fam = family_index[("L1", "rota-baxter", 1)]
    assert fam.chart[0][0].is_zero
    m_bad = FpMatrix.from_index(1, 4, 2)     # lone 1 in entry (1,1)
    assert chart_membership(fam, m_bad) is False
    zero = FpMatrix.from_index(0, 4, 2)
    assert chart_membership(fam, zero) is True


def test_membership_enforces_denominator_constraint(cmap, family_index):
    # the third chart divides by r32, so over F_2 membership forces r32 = 1
    fam = family_index[("L1", "rota-baxter", 3)]
    assert any(str(c) == "r32" for c in fam.constraints)
    zero = FpMatrix.from_index(0, 4, 2)
    assert chart_membership(fam, zero) is False
    points = family_solution_set(fam, 2)
    assert points, "chart reaches no F_2 point at all?"
    n = 4
    r32_pos = (3 - 1) * n + (2 - 1)
    assert all((m // 2 ** r32_pos) % 2 == 1 for m in points)


def test_membership_budget_refusal():
    # no entry exposes a parameter alone, so nothing can be read off and
    # the exhaustive fallback must consult the budget
    rows = [["k11*k22", "0", "0", "0"], ["0", "k22*k33", "0", "0"],
            ["0", "0", "k33*k11", "0"], ["0"] * 4]
    chart = [[parse_expr(e) for e in row] for row in rows]
    fam = OperatorFamily("L1", "nijenhuis", 99, chart,
                         ("k11", "k22", "k33"), (), False)
    zero = FpMatrix.from_index(0, 4, 2)
    with pytest.raises(RefusedSize):
        chart_membership(fam, zero, budget=4)
    assert chart_membership(fam, zero, budget=8) is True


def test_membership_rejects_malformed_and_size_mismatch(family_index):
    fam = family_index[("L1", "rota-baxter", 5)]
    with pytest.raises(ValueError):
        chart_membership(fam, FpMatrix.from_index(0, 4, 2))
    good = family_index[("L1", "rota-baxter", 1)]
    with pytest.raises(ValueError):
        chart_membership(good, FpMatrix.from_index(0, 2, 2))


def test_bind_family_substitutes_and_drops_parameter():
    chart = [[parse_expr("mu*b11"), parse_expr("0")],
             [parse_expr("0"), parse_expr("b11")]]
    fam = OperatorFamily("demo", "averaging", 1, chart, ("b11", "mu"), (),
                         False)
    bound = bind_family(fam, {"mu": 2})
    assert bound.free == ("b11",)
    assert bound.chart[0][0] == parse_expr("2*b11")
    same = bind_family(fam, {"nu": 7})
    assert same is fam


def test_chart_points_are_solutions(cmap, family_index):
    fam = family_index[("L1", "nijenhuis", 2)]
    assert verify_family(cmap["L1"], fam).holds
    points = family_solution_set(fam, 2)
    sols = set(solution_indices(cmap["L1"], make_kind("nijenhuis"),
                                2).tolist())
    assert points <= sols
    assert points


def test_roundtrip_membership(cmap, family_index):
    for key in (("L1", "rota-baxter", 1), ("L1", "nijenhuis", 2),
                ("L3", "averaging", 1)):
        fam = family_index[key]
        out = roundtrip_check(fam, 2, samples=25)
        assert out["ok"], out
        assert out["checked"] > 0


# ---------------------------------------------------------------------------
# coverage

def _verified(cmap, families, algebra, kname):
    picked = []
    for f in families:
        if f.algebra != algebra or f.kind != kname or f.malformed:
            continue
        try:
            if verify_family(cmap[algebra], f).holds:
                picked.append(f)
        except Exception:
            pass
    return picked


def test_coverage_report_structure(cmap, families):
    fams = _verified(cmap, families, "L1", "nijenhuis")
    rep = coverage(cmap["L1"], make_kind("nijenhuis"), 2, fams)
    assert isinstance(rep, CoverageReport)
    assert rep.total_solutions == 128
    assert 0 <= rep.covered <= rep.total_solutions
    assert rep.chart_points_outside == 0
    want = min(rep.total_solutions - rep.covered, rep.cap)
    assert len(rep.uncovered) == want
    assert rep.families_used
    d = rep.as_dict()
    assert d["total"] == 128 and d["note"]


def test_coverage_is_order_invariant_and_deterministic(cmap, families):
    fams = _verified(cmap, families, "L17", "nijenhuis")
    a = coverage(cmap["L17"], make_kind("nijenhuis"), 2, fams)
    b = coverage(cmap["L17"], make_kind("nijenhuis"), 2, fams[::-1])
    assert a.covered == b.covered
    assert a.total_solutions == b.total_solutions
    assert {m.index() for m in a.uncovered} == {m.index() for m in b.uncovered}
    again = coverage(cmap["L17"], make_kind("nijenhuis"), 2, fams)
    assert again.as_dict() == a.as_dict()


def test_coverage_without_families(cmap):
    rep = coverage(cmap["L1"], make_kind("reynolds"), 2, [], cap=8)
    assert rep.covered == 0
    assert len(rep.uncovered) == min(rep.total_solutions, 8)


def test_coverage_skips_charts_with_imaginary_entries(cmap, families):
    table = bind_params(cmap["L14"], {"mu": RatExpr.const(0)})
    fams = _verified(cmap, families, "L14", "rota-baxter")
    assert fams, "expected verified charts here"
    rep = coverage(table, make_kind("rota-baxter"), 2, fams,
                   fixed={"mu": 0})
    reasons = {s["reason"] for s in rep.families_skipped}
    assert "NonRealValue" in reasons


def test_coverage_rejects_foreign_family(cmap, families):
    fams = _verified(cmap, families, "L2", "nijenhuis")
    with pytest.raises(ValueError):
        coverage(cmap["L1"], make_kind("nijenhuis"), 2, fams)


def test_coverage_propagates_budget(cmap):
    with pytest.raises(RefusedSize):
        coverage(cmap["L1"], make_kind("nijenhuis"), 2, [], budget=100)
