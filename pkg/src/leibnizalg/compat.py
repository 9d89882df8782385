"""Compatibility of two bracket structures on a common underlying space.

Two right Leibniz brackets on the same space are compatible when every
linear combination l1*[.,.]_1 + l2*[.,.]_2 is again right Leibniz.  That
holds iff both brackets satisfy the Leibniz identity and the mixed residual

  M(x,y,z) = [x,[y,z]_1]_2 + [x,[y,z]_2]_1 - [[x,y]_1,z]_2 - [[x,y]_2,z]_1
             + [[x,z]_1,y]_2 + [[x,z]_2,y]_1

vanishes.  The scan works in the shared fixed basis exactly as the tables
are stored; no basis change is searched for, so "incompatible" means
incompatible as presented.  Catalog tables sharing a parameter name are
treated as independently parameterized (one side is renamed first).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .algebra import (
    AlgebraTable,
    CatalogError,
    ResidualTensor,
    bind_params,
    combined_bracket,
    data_dir,
    leibniz_residual,
    sample_bindings,
)
from .exact import RatExpr, RE_ZERO, RE_ONE

SCAN_NOTE = ("pairs are compared in the shared fixed basis as stored; "
             "no basis change is attempted")


def mixed_residual(a: AlgebraTable, b: AlgebraTable) -> ResidualTensor:
    """The obstruction tensor whose vanishing makes the bracket pencil
    Leibniz for all coefficients (given that both brackets already are)."""
    if a.dim != b.dim:
        raise ValueError("tables have different dimensions")
    n = a.dim

    def unit(i):
        return [RE_ONE if q == i else RE_ZERO for q in range(n)]

    entries = []
    for i in range(n):
        plane = []
        for j in range(n):
            line = []
            for k in range(n):
                t1 = b.bracket(unit(i), a.product(j, k))
                t2 = a.bracket(unit(i), b.product(j, k))
                t3 = b.bracket(a.product(i, j), unit(k))
                t4 = a.bracket(b.product(i, j), unit(k))
                t5 = b.bracket(a.product(i, k), unit(j))
                t6 = a.bracket(b.product(i, k), unit(j))
                line.append([t1[q] + t2[q] - t3[q] - t4[q] + t5[q] + t6[q]
                             for q in range(n)])
            plane.append(line)
        entries.append(plane)
    return ResidualTensor(n, entries)


def _disjoin_params(a: AlgebraTable, b: AlgebraTable):
    """Rename b's parameters that clash with a's, so the pair is checked
    with independent symbolic parameters."""
    clashes = set(a.param_names()) & set(b.param_names())
    if not clashes:
        return b, {}
    rename = {}
    taken = set(a.param_names()) | set(b.param_names())
    for name in sorted(clashes):
        fresh = name + "_b"
        while fresh in taken:
            fresh += "b"
        taken.add(fresh)
        rename[name] = fresh
    return bind_params(b, {k: RatExpr.var(v) for k, v in rename.items()}), \
        rename


def is_compatible(a: AlgebraTable, b: AlgebraTable) -> bool:
    """Both brackets Leibniz and the mixed residual zero, symbolically in
    any unbound parameters (clashing names count as distinct parameters)."""
    b2, _ = _disjoin_params(a, b)
    return (leibniz_residual(a).is_zero
            and leibniz_residual(b2).is_zero
            and mixed_residual(a, b2).is_zero)


def pair_witness(a: AlgebraTable, b: AlgebraTable):
    """First nonzero mixed-residual entry as (i, j, k, q, value), 1-based."""
    b2, _ = _disjoin_params(a, b)
    return mixed_residual(a, b2).first_failure()


def lambda_sample_check(a: AlgebraTable, b: AlgebraTable, *,
                        samples: int = 50, seed: int = 0) -> dict:
    """Random coefficient pencils of the two brackets rechecked exactly.

    Draws (l1, l2) rational pairs and verifies the combined bracket's
    Leibniz residual vanishes; parameters stay symbolic.
    """
    b2, _ = _disjoin_params(a, b)
    rng = random.Random(seed)
    failures = []
    for t in range(samples):
        l1 = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        l2 = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        pencil = combined_bracket(a, b2, RatExpr.const(l1), RatExpr.const(l2))
        hit = leibniz_residual(pencil).first_failure()
        if hit is not None:
            i, j, k, q, value = hit
            failures.append({"l1": str(l1), "l2": str(l2),
                             "i": i, "j": j, "k": k, "q": q,
                             "value": str(value)})
    return {"samples": samples, "ok": not failures, "failures": failures}


def load_claimed_pairs(path: Path | None = None):
    """The claimed compatible pairs shipped with the catalog data."""
    if path is None:
        path = data_dir() / "claimed_compatible_pairs.json"
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise CatalogError("", "claimed pairs must be an array")
    pairs = []
    for t, item in enumerate(raw):
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(x, str) for x in item)):
            raise CatalogError(f"/{t}", "pair must be [name, name]")
        pairs.append((item[0], item[1]))
    return pairs


def _key(a: str, b: str):
    def rank(name):
        digits = "".join(ch for ch in name if ch.isdigit())
        return (int(digits) if digits else 0, name)
    return tuple(sorted((a, b), key=rank))


@dataclass
class PairReport:
    names: list
    pairs_checked: list
    diagonal_compatible: list
    compatible: list
    failing: list                    # {"pair", "witness"}
    per_value_exceptions: list       # {"pair", "passing_bindings"}
    claimed: list
    claimed_but_failing: list
    passing_but_unclaimed: list
    unmatchable_claims: list
    lambda_checks: dict | None
    note: str = SCAN_NOTE

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "pairs_checked": [list(p) for p in self.pairs_checked],
            "diagonal_compatible": list(self.diagonal_compatible),
            "compatible": [list(p) for p in self.compatible],
            "failing": self.failing,
            "per_value_exceptions": self.per_value_exceptions,
            "claimed": [list(p) for p in self.claimed],
            "claimed_but_failing": [list(p) for p in self.claimed_but_failing],
            "passing_but_unclaimed":
                [list(p) for p in self.passing_but_unclaimed],
            "unmatchable_claims": [list(p) for p in self.unmatchable_claims],
            "lambda_checks": self.lambda_checks,
            "note": self.note,
        }


def compat_scan(tables, *, claimed=None, lambda_samples: int = 0,
                seed: int = 0, pool=None) -> PairReport:
    """Evaluate every unordered pair of tables and diff against the claims.

    Parameterized tables are first checked at every admissible sample
    binding (values from pool, when given); pairs passing all bindings are
    then rechecked symbolically, and only the symbolic verdict counts as
    compatible.  Pairs compatible at some bindings but not symbolically
    are listed as per-value exceptions.  With lambda_samples > 0, every
    compatible pair is additionally probed with that many random bracket
    pencils.
    """
    tables = list(tables)
    names = [t.name for t in tables]
    diagonal = [t.name for t in tables if is_compatible(t, t)]

    def bindings_of(table):
        return sample_bindings(table) if pool is None \
            else sample_bindings(table, pool)

    pairs_checked, compatible, failing, exceptions = [], [], [], []
    for s in range(len(tables)):
        for t in range(s + 1, len(tables)):
            a, b = tables[s], tables[t]
            pair = _key(a.name, b.name)
            pairs_checked.append(pair)
            b2, _ = _disjoin_params(a, b)
            passing, failing_binding = [], None
            for ba in bindings_of(a):
                for bb in bindings_of(b2):
                    av = bind_params(a, ba) if ba else a
                    bv = bind_params(b2, bb) if bb else b2
                    binding = {**{k: str(v) for k, v in ba.items()},
                               **{k: str(v) for k, v in bb.items()}}
                    if is_compatible(av, bv):
                        passing.append(binding)
                    elif failing_binding is None:
                        failing_binding = binding
            all_pass = failing_binding is None
            if all_pass and is_compatible(a, b2):
                compatible.append(pair)
                continue
            witness = pair_witness(a, b)
            row = {"pair": list(pair)}
            if witness is not None:
                i, j, k, q, value = witness
                row["witness"] = {"i": i, "j": j, "k": k, "q": q,
                                  "value": str(value)}
            else:
                row["witness"] = None   # a Leibniz residual failed instead
            failing.append(row)
            if passing:
                exceptions.append({"pair": list(pair),
                                   "passing_bindings": passing})

    claimed = load_claimed_pairs() if claimed is None else list(claimed)
    known = set(names)
    claimed_keys, unmatchable = [], []
    for a, b in claimed:
        if a in known and b in known:
            claimed_keys.append(_key(a, b))
        else:
            unmatchable.append((a, b))
    compatible_set = set(compatible)
    claimed_set = set(claimed_keys)
    claimed_but_failing = sorted(claimed_set - compatible_set)
    passing_but_unclaimed = sorted(compatible_set - claimed_set)

    lambda_checks = None
    if lambda_samples > 0:
        by_name = {t.name: t for t in tables}
        results = []
        ok = True
        for a, b in compatible:
            out = lambda_sample_check(by_name[a], by_name[b],
                                      samples=lambda_samples, seed=seed)
            ok = ok and out["ok"]
            if not out["ok"]:
                results.append({"pair": [a, b], "failures": out["failures"]})
        lambda_checks = {"samples": lambda_samples,
                         "pairs_checked": len(compatible),
                         "ok": ok, "failures": results}

    return PairReport(
        names=names,
        pairs_checked=pairs_checked,
        diagonal_compatible=diagonal,
        compatible=compatible,
        failing=failing,
        per_value_exceptions=exceptions,
        claimed=claimed,
        claimed_but_failing=claimed_but_failing,
        passing_but_unclaimed=passing_but_unclaimed,
        unmatchable_claims=unmatchable,
        lambda_checks=lambda_checks,
    )
