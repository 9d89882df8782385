"""Exhaustive operator-solution search over a small prime field.

For a bound structure-constant table and an operator condition, the p^(n*n)
matrices over F_p can be swept outright and the exact solution set listed.
Comparing that list against the points reachable by the verified parametric
charts measures how much of the solution set the charts explain.  Finite
field coverage is evidence, not proof: a chart that covers everything mod p
can still miss characteristic-0 solutions, and vice versa.

Two independent evaluation paths are kept deliberately:

  * "compiled": the symbolic equation system is compiled to coefficient
    arrays once, and all candidate matrices are evaluated by vectorized
    polynomial arithmetic;
  * "direct": residuals are recomputed from the structure constants by
    tensor contractions, never touching the symbolic pipeline.

Agreement of the two paths on a full sweep is itself a checked property.
All arithmetic is integer arithmetic reduced mod p; no floating point is
involved anywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product as iter_product

import numpy as np

from .algebra import AlgebraTable, bind_params, catalog_map
from .exact import (
    DenominatorVanishes,
    ExactError,
    NonInvertibleDenominator,
    NonRealValue,
    Poly,
    RatExpr,
    parse_expr,
    reduce_mod_p,
)
from .operators import OperatorFamily, OperatorKind, build_system, make_kind, \
    operator_residual

#: sweeps and membership fallbacks refuse to run past this many cases unless
#: the caller raises the budget explicitly (2^16 admits the full p=2 sweep
#: for 4x4 matrices; p=3 needs 3^16 ~ 43M and must be asked for)
DEFAULT_BUDGET = 1 << 16

COVERAGE_NOTE = ("finite-field coverage is evidence, not proof: charts are "
                 "compared with the brute-force solution set over F_p only, "
                 "and charts that do not reduce mod p are skipped")


class RefusedSize(ExactError):
    """A brute-force request exceeds the configured budget."""


def _check_prime(p: int):
    if not isinstance(p, int) or p < 2 or any(p % d == 0
                                              for d in range(2, int(p ** 0.5) + 1)):
        raise ValueError(f"{p!r} is not a prime")


@dataclass(frozen=True)
class FpMatrix:
    """An n x n matrix over F_p with entries reduced to [0, p)."""

    p: int
    entries: tuple  # tuple of row tuples of ints

    def __post_init__(self):
        _check_prime(self.p)
        n = len(self.entries)
        ok = all(isinstance(row, tuple) and len(row) == n
                 and all(isinstance(x, int) and 0 <= x < self.p for x in row)
                 for row in self.entries)
        if not ok:
            raise ValueError("entries must be square with values in [0, p)")

    @staticmethod
    def from_index(m: int, n: int, p: int) -> "FpMatrix":
        """Decode a counter value; digit r*n+c (little-endian) is entry (r,c)."""
        rows = []
        for r in range(n):
            row = []
            for c in range(n):
                row.append((m // p ** (r * n + c)) % p)
            rows.append(tuple(row))
        return FpMatrix(p, tuple(rows))

    def index(self) -> int:
        n = len(self.entries)
        return sum(self.entries[r][c] * self.p ** (r * n + c)
                   for r in range(n) for c in range(n))

    def as_lists(self):
        return [list(row) for row in self.entries]


# ---------------------------------------------------------------------------
# compiled evaluation path

@dataclass
class CompiledSystem:
    """Equation coefficients over F_p, ready for vectorized evaluation.

    monos[t] is a monomial in the flattened matrix entries, as a tuple of
    (flat_position, exponent); coeffs[t][k] is the coefficient of monomial t
    in equation k, already reduced mod p.
    """

    p: int
    n: int
    monos: tuple
    coeffs: np.ndarray

    @property
    def equation_count(self) -> int:
        return self.coeffs.shape[1]


def compile_system(table: AlgebraTable, kind: OperatorKind,
                   p: int) -> CompiledSystem:
    _check_prime(p)
    if not table.is_bound():
        raise ValueError(f"{table.name} still has unbound parameters "
                         f"{table.param_names()}")
    if kind.weight is not None and kind.weight.params():
        raise ValueError("the weight must be bound for finite-field work")
    n = table.dim
    if n > 9:
        raise ValueError("unknown-name digits support dimension at most 9")
    sys = build_system(table, kind)

    def flat(name: str) -> int:
        return (int(name[-2]) - 1) * n + (int(name[-1]) - 1)

    mono_ids = {}
    monos = []
    columns = []
    for eq, den in zip(sys.equations, sys.denominators):
        dval = den.const_value()  # denominators collect only table constants
        terms = {}
        for mono, coef in eq.terms.items():
            cval = reduce_mod_p(RatExpr.const(coef / dval), p)
            if cval == 0:
                continue
            key = tuple((flat(nm), e) for nm, e in mono)
            mid = mono_ids.get(key)
            if mid is None:
                mid = mono_ids[key] = len(monos)
                monos.append(key)
            terms[mid] = cval
        if terms:
            columns.append(terms)
    coeffs = np.zeros((len(monos), len(columns)), dtype=np.int32)
    for k, terms in enumerate(columns):
        for mid, cval in terms.items():
            coeffs[mid, k] = cval
    return CompiledSystem(p, n, tuple(monos), coeffs)


def _digit_block(idx: np.ndarray, n2: int, p: int) -> np.ndarray:
    out = np.empty((idx.size, n2), dtype=np.int32)
    rem = idx.astype(np.int64)
    for t in range(n2):
        out[:, t] = rem % p
        rem = rem // p
    return out


def _compiled_mask(cs: CompiledSystem, digits: np.ndarray) -> np.ndarray:
    values = np.ones((digits.shape[0], len(cs.monos)), dtype=np.int32)
    for col, mono in enumerate(cs.monos):
        acc = np.ones(digits.shape[0], dtype=np.int32)
        for pos, exp in mono:
            acc = acc * digits[:, pos] ** exp
        values[:, col] = acc
    residues = (values @ cs.coeffs) % cs.p
    return (residues == 0).all(axis=1)


# ---------------------------------------------------------------------------
# direct evaluation path (independent of the symbolic system)

def _table_mod_p(table: AlgebraTable, p: int) -> np.ndarray:
    n = table.dim
    cm = np.zeros((n, n, n), dtype=np.int16)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                e = table.c[i][j][k]
                if not e.is_zero:
                    cm[i, j, k] = reduce_mod_p(e, p)
    return cm


def _direct_mask(cm: np.ndarray, kind: OperatorKind, digits: np.ndarray,
                 p: int, n: int) -> np.ndarray:
    T = digits.reshape(-1, n, n).astype(np.int16)
    btt = np.einsum("mai,mbj,abk->mijk", T, T, cm) % p
    bte = np.einsum("mai,ajk->mijk", T, cm) % p
    bet = np.einsum("mbj,ibk->mijk", T, cm) % p

    def tap(tensor):
        return np.einsum("mqk,mijk->mijq", T, tensor) % p

    axes = (1, 2, 3)
    if kind.name == "rota-baxter":
        w = reduce_mod_p(kind.weight, p)
        inner = (bte + bet + w * cm[None, :, :, :]) % p
        return (((btt - tap(inner)) % p) == 0).all(axis=axes)
    if kind.name == "nijenhuis":
        tb = np.einsum("mqk,ijk->mijq", T, cm) % p
        inner = (bte + bet - tb) % p
        return (((btt - tap(inner)) % p) == 0).all(axis=axes)
    if kind.name == "reynolds":
        inner = (bet + bte - btt) % p
        return (((btt - tap(inner)) % p) == 0).all(axis=axes)
    left = (((btt - tap(bte)) % p) == 0).all(axis=axes)
    right = (((btt - tap(bet)) % p) == 0).all(axis=axes)
    return left & right


# ---------------------------------------------------------------------------
# sweeping

def solution_indices(table: AlgebraTable, kind: OperatorKind, p: int, *,
                     budget: int = DEFAULT_BUDGET, path: str = "compiled",
                     shard: int | None = None,
                     chunk: int = 1 << 14) -> np.ndarray:
    """Counter values of all solution matrices, ascending.

    With shard set, only matrices whose first row encodes that value are
    scanned; the p^n shards partition the full space.
    """
    _check_prime(p)
    if not table.is_bound():
        raise ValueError(f"{table.name} still has unbound parameters "
                         f"{table.param_names()}")
    n = table.dim
    total = p ** (n * n)
    if total > budget:
        raise RefusedSize(
            f"sweeping {p}^{n * n} = {total} matrices exceeds the budget "
            f"{budget}; pass a larger budget to allow it")
    if path == "compiled":
        cs = compile_system(table, kind, p)

        def evaluate(digits):
            return _compiled_mask(cs, digits)
    elif path == "direct":
        cm = _table_mod_p(table, p)

        def evaluate(digits):
            return _direct_mask(cm, kind, digits, p, n)
    else:
        raise ValueError(f"unknown evaluation path {path!r}")

    if shard is None:
        blocks = (np.arange(start, min(start + chunk, total), dtype=np.int64)
                  for start in range(0, total, chunk))
    else:
        stride = p ** n
        if not 0 <= shard < stride:
            raise ValueError(f"shard must lie in [0, {stride})")
        span = total // stride
        blocks = (shard + stride * np.arange(start, min(start + chunk, span),
                                             dtype=np.int64)
                  for start in range(0, span, chunk))
    hits = [idx[evaluate(_digit_block(idx, n * n, p))] for idx in blocks]
    if not hits:
        return np.array([], dtype=np.int64)
    return np.concatenate(hits)


def enumerate_solutions(table: AlgebraTable, kind: OperatorKind, p: int, *,
                        budget: int = DEFAULT_BUDGET, path: str = "compiled"):
    """Yield solutions as FpMatrix in deterministic counter order."""
    for m in solution_indices(table, kind, p, budget=budget,
                              path=path).tolist():
        yield FpMatrix.from_index(m, table.dim, p)


def sweep_shard(args):
    """Worker entry point for one shard; picklable for process pools.

    args = (catalog_path, algebra, bindings, kind_name, weight, p, shard,
            budget, path) with bindings/weight as parseable strings.
    """
    (catalog_path, algebra, bindings, kind_name, weight, p, shard,
     budget, path) = args
    table = catalog_map(catalog_path)[algebra]
    if bindings:
        table = bind_params(table, {k: parse_expr(v)
                                    for k, v in bindings.items()})
    kind = make_kind(kind_name, weight)
    return solution_indices(table, kind, p, budget=budget, path=path,
                            shard=shard).tolist()


def dual_path_check(table: AlgebraTable, kind: OperatorKind, p: int, *,
                    budget: int = DEFAULT_BUDGET) -> dict:
    """Full-sweep agreement between the compiled and direct paths."""
    compiled = solution_indices(table, kind, p, budget=budget, path="compiled")
    direct = solution_indices(table, kind, p, budget=budget, path="direct")
    agree = compiled.shape == direct.shape and bool((compiled == direct).all())
    first = None
    if not agree:
        sym = sorted(set(compiled.tolist()) ^ set(direct.tolist()))
        first = sym[0] if sym else None
    return {
        "algebra": table.name,
        "kind": kind.name,
        "p": p,
        "total": p ** (table.dim ** 2),
        "compiled_count": int(compiled.size),
        "direct_count": int(direct.size),
        "agree": agree,
        "first_disagreement": first,
    }


def lift_check(table: AlgebraTable, kind: OperatorKind, p: int, indices, *,
               samples: int = 100, seed: int = 0) -> dict:
    """Lift sampled solutions to integer matrices and recheck over Q.

    The lifted residual, reduced mod p, must vanish; this validates the
    sweep through exact arithmetic instead of array arithmetic.
    """
    pool = [int(m) for m in indices]
    rng = random.Random(seed)
    picked = pool if len(pool) <= samples else sorted(rng.sample(pool, samples))
    n = table.dim
    for m in picked:
        M = FpMatrix.from_index(m, n, p)
        T = [[RatExpr.const(M.entries[r][c]) for c in range(n)]
             for r in range(n)]
        res = operator_residual(table, kind, T)
        for row in res:
            for vec in row:
                for e in vec:
                    if reduce_mod_p(e, p) != 0:
                        return {"ok": False, "checked": len(picked),
                                "counterexample": m}
    return {"ok": True, "checked": len(picked), "counterexample": None}


# ---------------------------------------------------------------------------
# chart membership

def bind_family(fam: OperatorFamily, bindings: dict) -> OperatorFamily:
    """Substitute external values (e.g. a table parameter) into a chart."""
    if fam.chart is None:
        raise ValueError(f"{fam.label()} is malformed")
    sub = {k: v if isinstance(v, RatExpr) else RatExpr.const(v)
           for k, v in bindings.items() if k in fam.free}
    if not sub:
        return fam
    chart = [[e.substitute(sub) for e in row] for row in fam.chart]
    constraints = tuple(con.substitute(sub) for con in fam.constraints)
    free = tuple(x for x in fam.free if x not in sub)
    return OperatorFamily(fam.algebra, fam.kind, fam.index, chart, free,
                          constraints, False, fam.weight, None, fam.note)


def _eval_chart(fam: OperatorFamily, p: int, assignment: dict):
    """Counter value of the chart at an F_p assignment, or None if the
    point is outside the chart's domain (a constraint or denominator dies)."""
    sub = {name: RatExpr.const(v) for name, v in assignment.items()}
    for con in fam.constraints:
        try:
            if reduce_mod_p(con.substitute(sub), p) == 0:
                return None
        except (DenominatorVanishes, NonInvertibleDenominator):
            return None
    n = len(fam.chart)
    m = 0
    for r in range(n):
        for c in range(n):
            e = fam.chart[r][c]
            if e.is_zero:
                continue
            try:
                v = reduce_mod_p(e.substitute(sub), p)
            except (DenominatorVanishes, NonInvertibleDenominator):
                return None
            m += v * p ** (r * n + c)
    return m


def _read_off(fam: OperatorFamily, M: FpMatrix) -> dict:
    """Parameter values forced by entries where a parameter stands alone."""
    p = M.p
    n = len(M.entries)
    forced = {}
    for r in range(n):
        for c in range(n):
            e = fam.chart[r][c]
            if not e.den.is_const or len(e.num.terms) != 1:
                continue
            (mono, coef), = e.num.terms.items()
            if len(mono) != 1 or mono[0][1] != 1:
                continue
            name = mono[0][0]
            if name in forced:
                continue
            try:
                scale = reduce_mod_p(RatExpr(Poly.const(coef), e.den), p)
            except (NonInvertibleDenominator, NonRealValue):
                continue
            if scale == 0:
                continue
            forced[name] = (M.entries[r][c] * pow(scale, -1, p)) % p
    return forced


def chart_membership(fam: OperatorFamily, M: FpMatrix, *,
                     budget: int = DEFAULT_BUDGET, fixed: dict | None = None
                     ) -> bool:
    """Whether some admissible F_p assignment of the chart evaluates to M.

    Parameters standing alone in an entry are read off first; any that
    remain are searched exhaustively (p^k cases, refused past the budget).
    Assignments violating a constraint or killing a denominator never count.
    """
    if fam.chart is None:
        raise ValueError(f"{fam.label()} is malformed")
    n = len(M.entries)
    if len(fam.chart) != n:
        raise ValueError("chart and matrix dimensions differ")
    p = M.p
    assigned = {k: v % p for k, v in (fixed or {}).items() if k in fam.free}
    for name, value in _read_off(fam, M).items():
        if name not in assigned:
            assigned[name] = value
    rest = [x for x in fam.free if x not in assigned]
    if p ** len(rest) > budget:
        raise RefusedSize(
            f"membership fallback needs {p}^{len(rest)} cases for "
            f"{fam.label()}, over the budget {budget}")
    target = M.index()
    for combo in iter_product(range(p), repeat=len(rest)):
        assignment = dict(assigned)
        assignment.update(zip(rest, combo))
        if _eval_chart(fam, p, assignment) == target:
            return True
    return False


def family_solution_set(fam: OperatorFamily, p: int, *,
                        budget: int = DEFAULT_BUDGET,
                        fixed: dict | None = None) -> set:
    """All counter values the chart reaches over F_p (admissible points)."""
    if fam.chart is None:
        raise ValueError(f"{fam.label()} is malformed")
    _check_prime(p)
    assigned = {k: v % p for k, v in (fixed or {}).items() if k in fam.free}
    rest = [x for x in fam.free if x not in assigned]
    if p ** len(rest) > budget:
        raise RefusedSize(
            f"enumerating {p}^{len(rest)} assignments for {fam.label()} "
            f"is over the budget {budget}")
    points = set()
    for combo in iter_product(range(p), repeat=len(rest)):
        assignment = dict(assigned)
        assignment.update(zip(rest, combo))
        m = _eval_chart(fam, p, assignment)
        if m is not None:
            points.add(m)
    return points


def roundtrip_check(fam: OperatorFamily, p: int, *, samples: int = 100,
                    seed: int = 0, budget: int = DEFAULT_BUDGET,
                    fixed: dict | None = None) -> dict:
    """chart_membership must accept every point the chart itself produces."""
    rng = random.Random(seed)
    assigned = {k: v % p for k, v in (fixed or {}).items() if k in fam.free}
    rest = [x for x in fam.free if x not in assigned]
    if not rest:
        samples = 1
    checked = 0
    attempts = 0
    while checked < samples and attempts < 50 * max(samples, 1):
        attempts += 1
        assignment = dict(assigned)
        assignment.update({x: rng.randrange(p) for x in rest})
        m = _eval_chart(fam, p, assignment)
        if m is None:
            continue
        M = FpMatrix.from_index(m, len(fam.chart), p)
        if not chart_membership(fam, M, budget=budget, fixed=fixed):
            return {"family": fam.label(), "checked": checked, "ok": False,
                    "counterexample": m}
        checked += 1
    return {"family": fam.label(), "checked": checked, "ok": True,
            "counterexample": None}


# ---------------------------------------------------------------------------
# coverage

@dataclass
class CoverageReport:
    algebra: str
    kind: str
    p: int
    total_solutions: int
    covered: int
    uncovered: list            # FpMatrix, truncated to cap
    cap: int
    families_used: list        # {"family": label, "points": count}
    families_skipped: list     # {"family": label, "reason": exc name}
    chart_points_outside: int  # family points that are not solutions (0 expected)
    note: str = COVERAGE_NOTE

    def as_dict(self) -> dict:
        return {
            "algebra": self.algebra,
            "kind": self.kind,
            "p": self.p,
            "total": self.total_solutions,
            "covered": self.covered,
            "uncovered": [{"index": M.index(), "entries": M.as_lists()}
                          for M in self.uncovered],
            "cap": self.cap,
            "families_used": self.families_used,
            "families_skipped": self.families_skipped,
            "chart_points_outside": self.chart_points_outside,
            "note": self.note,
        }


def coverage(table: AlgebraTable, kind: OperatorKind, p: int, families, *,
             budget: int = DEFAULT_BUDGET, cap: int = 32,
             path: str = "compiled", fixed: dict | None = None,
             solutions=None) -> CoverageReport:
    """Sweep all solutions and test each against the given charts.

    families should be the verified (non-malformed) families for this
    algebra and kind; charts must already match the table's binding, or
    fixed must supply F_p values for bound table parameters appearing in
    the charts.  A precomputed, ascending solution-index array (e.g. from
    a sharded sweep) can be passed to skip the sweep.
    """
    if solutions is None:
        sols = solution_indices(table, kind, p, budget=budget, path=path)
    else:
        sols = np.asarray(solutions, dtype=np.int64)
    solution_set = set(sols.tolist())
    used, skipped = [], []
    covered_points = set()
    outside = 0
    for fam in families:
        if fam.algebra != table.name or fam.kind != kind.name:
            raise ValueError(f"{fam.label()} does not match "
                             f"{table.name}/{kind.name}")
        if fam.malformed:
            skipped.append({"family": fam.label(), "reason": "malformed"})
            continue
        try:
            points = family_solution_set(fam, p, budget=budget, fixed=fixed)
        except (NonRealValue, NonInvertibleDenominator, RefusedSize) as err:
            skipped.append({"family": fam.label(),
                            "reason": type(err).__name__})
            continue
        used.append({"family": fam.label(), "points": len(points)})
        outside += len(points - solution_set)
        covered_points |= points & solution_set
    uncovered = [m for m in sols.tolist() if m not in covered_points]
    return CoverageReport(
        algebra=table.name,
        kind=kind.name,
        p=p,
        total_solutions=int(sols.size),
        covered=len(covered_points),
        uncovered=[FpMatrix.from_index(m, table.dim, p)
                   for m in uncovered[:cap]],
        cap=cap,
        families_used=used,
        families_skipped=skipped,
        chart_points_outside=outside,
    )
