"""The acceptance checks, one function per criterion.

Each check returns a CriterionResult; ``run_all`` executes them in order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .groups import ball, free_abelian, free_group
from .linalg import opnorm
from .maps import FiniteMap, defect, defect_report
from .pipeline import ball_pair, casewise_defect, m1_m2
from . import experiments as ex


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.1f}s) {self.detail}"

    def to_json(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "seconds": self.seconds, "detail": self.detail}


def _timed(fn):
    def wrapper(cfg):
        t0 = time.perf_counter()
        res = fn(cfg)
        res.seconds = time.perf_counter() - t0
        if "runtime_limit" in res.detail and res.seconds >= res.detail["runtime_limit"]:
            res.passed = False
        return res

    wrapper.__name__ = fn.__name__
    return wrapper


def _permutation_rep(spec, images, elements):
    """Homomorphism F_k -> permutation matrices given images of the generators."""
    gens = [np.asarray(m, dtype=complex) for m in images]
    table = {}
    for w in elements:
        M = np.eye(gens[0].shape[0], dtype=complex)
        for x in w:
            M = M @ (gens[x - 1] if x > 0 else gens[-x - 1].T)
        table[w] = M
    return FiniteMap(spec, table)


def _perm(p):
    n = len(p)
    M = np.zeros((n, n))
    M[list(p), list(range(n))] = 1
    return M


def exact_pairs():
    """Pairs of exact unitary representations with their test sets F."""
    out = []
    z2 = free_abelian(2)
    dom = ball(z2, 4).elements
    for th_p, th_m in (((0.3, -1.1), (2.0, 0.7)), ((0.0, 0.0), (np.pi, 0.5))):
        tabs = []
        for th in (th_p, th_m):
            tabs.append(FiniteMap(z2, {g: np.array([[np.exp(1j * np.dot(th, g))]]) for g in dom}))
        for fr in (1, 2):
            out.append((f"Z2 characters F=ball({fr})", tuple(tabs), ball(z2, fr).elements))
    f2 = free_group(2)
    dom = ball(f2, 2).elements
    s3a, s3b = _perm((1, 0, 2)), _perm((1, 2, 0))
    plus = _permutation_rep(f2, [s3a, s3b], dom)
    minus = _permutation_rep(f2, [s3b, s3a], dom)
    out.append(("F2 -> S3 permutation reps F=ball(1)", (plus, minus), ball(f2, 1).elements))
    return out


@_timed
def criterion_1(cfg):
    tol = cfg.tol["exact"]
    worst = 0.0
    for name, pair, F in exact_pairs():
        rep = defect_report(pair, F)
        worst = max(worst, rep.eps1, rep.eps2, rep.eps2prime)
    return CriterionResult(1, "exact representations have zero epsilons",
                           worst < tol, {"max_eps": worst, "runtime_limit": 1.0})


def _nonincreasing(vals, slack=1e-12):
    return all(b <= a + slack for a, b in zip(vals, vals[1:]))


@_timed
def criterion_2(cfg):
    cfg2 = ex.copy_config(cfg, defects={"F_radius": 1})
    results = ex.run_defects(cfg2, [4, 6, 8, 12])
    curves = {k: [getattr(r, k) for _, _, r, _ in results] for k in ("eps1", "eps2", "eps2prime")}
    ok = all(_nonincreasing(v) and v[-1] < v[0] / 2 for v in curves.values())
    detail = {k: [round(x, 6) for x in v] for k, v in curves.items()}
    detail["runtime_limit"] = 120.0
    return CriterionResult(2, "truncated Bott pair epsilons decrease", ok, detail)


@_timed
def criterion_3(cfg):
    res = ex.relation_sweep(cfg, np.random.default_rng(cfg.seed))
    ok = res["exact_deviation"] < cfg.tol["projection"] and res["max_ratio"] <= res["C"] <= 20
    return CriterionResult(3, "P'' on relation pairs and perturbations", ok, res)


@_timed
def criterion_4(cfg):
    res = ex.pprime_sweep(cfg)
    res["runtime_limit"] = 5.0
    return CriterionResult(4, "P' equals P'' on universal pairs", res["max_gap"] < cfg.tol["projection"], res)


@_timed
def criterion_5(cfg):
    rep = ex.homotopy_check(cfg, np.random.default_rng(cfg.seed + 1))
    return CriterionResult(5, "cutting homotopy stays almost projection", rep.ok, rep.to_json())


@_timed
def criterion_6(cfg):
    cfg6 = ex.copy_config(cfg, convergence={"radii": [4, 6, 8, 12], "R_star": 16})
    res = ex.run_convergence(cfg6)
    gaps = [r["sup_norm_gap"] for r in res["rows"]]
    ok = all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < cfg.tol["convergence_final"]
    return CriterionResult(6, "P'' of truncations converges", ok,
                           {"gaps": [float(f"{g:.6g}") for g in gaps], "R_star": res["R_star"]})


@_timed
def criterion_7(cfg):
    cfg7 = ex.copy_config(cfg, kclass={"R": 12, "grids": [24, 48]})
    report, outs = ex.run_kclass(cfg7)
    ok = (report.agree and abs(report.chern_input) == 1
          and all(o["deviation_max"] < 0.25 for o in outs))
    detail = {
        "chern_input": report.chern_input,
        "chern_output": {o["grid"]: o["chern"] for o in outs},
        "max_phase": {o["grid"]: round(o["max_phase"], 4) for o in outs},
        "deviation_max": round(max(o["deviation_max"] for o in outs), 4),
    }
    return CriterionResult(7, "Chern number of input equals output", ok, detail)


@_timed
def criterion_8(cfg):
    c = cfg["casewise"]
    rng = np.random.default_rng(cfg.seed + 2)
    symbols = ex.make_symbols(cfg)
    spec = symbols.spec
    R = c["R"]
    G = ball(spec, c["pair_radius"]).elements
    raw = ball_pair(symbols, R, ball(spec, 2 * c["pair_radius"]).elements, symmetrize=False)
    Y = ball(spec, R)
    n = symbols.fiber_dim
    worst_col = 0.0
    seen = set()
    cache = {}
    for _ in range(c["samples"]):
        g, h = G[rng.integers(len(G))], G[rng.integers(len(G))]
        y = Y.elements[rng.integers(len(Y))]
        sign = "+" if rng.integers(2) == 0 else "-"
        pi = raw[0] if sign == "+" else raw[1]
        key = (g, h, sign)
        if key not in cache:
            cache[key] = defect(pi, g, h).toarray()
        k = Y.position(y)
        col = cache[key][:, k * n:(k + 1) * n]
        cw = casewise_defect(symbols, R, g, h, y, sign)
        expected = np.zeros_like(col)
        if cw.target in Y:
            j = Y.position(cw.target)
            expected[j * n:(j + 1) * n] = cw.value
        worst_col = max(worst_col, np.abs(col - expected).max())
        seen.add((g, h))
    worst_m = 0.0
    for g, h in seen:
        mm = m1_m2(symbols, g, h, R)
        gap = opnorm(defect(raw[0], g, h) - defect(raw[1], g, h))
        worst_m = max(worst_m, abs(mm.value - gap))
    ok = worst_col < cfg.tol["casewise"] and worst_m < cfg.tol["m1m2"]
    return CriterionResult(8, "closed-form defect matches dense defect", ok,
                           {"max_column_error": float(worst_col), "max_m1m2_error": float(worst_m),
                            "samples": c["samples"], "distinct_gh": len(seen)})


@_timed
def criterion_9(cfg):
    res = ex.formula_sweep(cfg, np.random.default_rng(cfg.seed + 3))
    return CriterionResult(9, "block and factored P'' agree", res["max_entry_gap"] < cfg.tol["formula"], res)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def run_all(cfg, only=None, echo=None):
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if only and i not in only:
            continue
        res = fn(cfg)
        if echo:
            echo(res.line())
        out.append(res)
    return out
