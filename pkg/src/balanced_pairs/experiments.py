"""Experiment runners shared by the command line and the acceptance suite."""

from __future__ import annotations

import time

import numpy as np

from .groups import GroupSpec, ball
from .linalg import random_selfadjoint
from .maps import defect_report
from .pipeline import (
    B_MINUS,
    SymbolPair,
    ball_pair,
    bott_symbols,
    convergence_experiment,
    lipschitz_balance_check,
    torus_chern,
)
from .projections import (
    CircleCover,
    TorusCover,
    build_Pdoubleprime,
    build_Pprime,
    homotopy_sweep,
    pdoubleprime_factored,
    pdoubleprime_matrix,
    random_K2_pair,
    universal_generators,
)

# calibrated on 6000 perturbed pairs: observed max ratio 6.4
PERTURBATION_CONSTANT = 10.0


def make_group(cfg):
    g = cfg["group"]
    return GroupSpec(g["kind"], g["rank"])


def make_symbols(cfg):
    s = cfg["symbols"]
    spec = make_group(cfg)
    if s["kind"] == "bott":
        return bott_symbols(s["R0"], s["winding"], s["profile"])
    if s["kind"] == "identity":
        eye = np.eye(2, dtype=complex)
        return SymbolPair(spec, lambda y: eye, lambda y: eye, 0.0, 2, "identity")
    R0 = s["R0"]
    top = np.diag([1.0, 0.0]).astype(complex)
    return SymbolPair(spec, lambda y: top if spec.length(y) < R0 else B_MINUS,
                      lambda y: B_MINUS, R0, 2, "disk", {"R0": R0})


def make_cover(cfg, spec):
    c = cfg["cover"]
    if spec.abelian and spec.rank >= 2:
        return TorusCover(spec, c["n_arcs"], c["overlap"])
    return CircleCover(spec, c["n_arcs"], c["overlap"])


def run_defects(cfg, radii=None):
    """DefectReport per radius, F = Ball(F_radius), maps tabulated on F.F."""
    spec = make_group(cfg)
    symbols = make_symbols(cfg)
    fr = cfg["defects"]["F_radius"]
    F = ball(spec, fr).elements
    dom = ball(spec, 2 * fr).elements
    out = []
    for R in radii or cfg["defects"]["radii"]:
        t0 = time.perf_counter()
        pair = ball_pair(symbols, R, dom)
        rep = defect_report(pair, F, fr)
        out.append((R, pair[0].dim, rep, time.perf_counter() - t0))
    return out


def defect_rows(results):
    return [
        {"R": R, "dim": dim, "eps1": r.eps1, "eps2": r.eps2, "eps2prime": r.eps2prime,
         "wall_time": t}
        for R, dim, r, t in results
    ]


def run_convergence(cfg):
    spec = make_group(cfg)
    c = cfg["convergence"]
    return convergence_experiment(make_symbols(cfg), make_cover(cfg, spec), c["radii"],
                                  c["R_star"], c["grid"])


def run_kclass(cfg):
    spec = make_group(cfg)
    k = cfg["kclass"]
    return torus_chern(make_symbols(cfg), make_cover(cfg, spec), k["R"], tuple(k["grids"]),
                       k["input_grid"])


def run_lipschitz(cfg):
    spec = make_group(cfg)
    symbols = make_symbols(cfg)
    F = ball(spec, cfg["defects"]["F_radius"]).elements
    R = max(cfg["defects"]["radii"])
    return lipschitz_balance_check(symbols, F, R)


# ---------------------------------------------------------------- projection sweeps

def relation_sweep(cfg, rng):
    """Deviation of P'' on exact relation pairs and on perturbed copies."""
    p = cfg["projections"]
    exact = 0.0
    ratio = 0.0
    for _ in range(p["random_pairs"]):
        pair = random_K2_pair(rng, blocks=int(rng.integers(1, p["max_blocks"] + 1)))
        P = pdoubleprime_matrix(pair.a, pair.b)
        exact = max(exact, np.linalg.norm(P @ P - P, 2))
        n = pair.a.shape[0]
        for d in p["deltas"]:
            a = pair.a + random_selfadjoint(n, rng, d)
            b = pair.b + random_selfadjoint(n, rng, d)
            P = pdoubleprime_matrix(a, b)
            ratio = max(ratio, np.linalg.norm(P @ P - P, 2) / d)
    return {"exact_deviation": float(exact), "max_ratio": float(ratio), "C": PERTURBATION_CONSTANT}


def pprime_sweep(cfg):
    ts = np.linspace(-1, 1, cfg["projections"]["t_points"])
    worst = 0.0
    for t in ts:
        a, b = universal_generators(t)
        worst = max(worst, np.linalg.norm(build_Pprime(a, b).P - build_Pdoubleprime(a, b).P, 2))
    return {"points": len(ts), "max_gap": float(worst)}


def homotopy_check(cfg, rng, ts=(-0.6, -0.2, 0.3, 0.7, 1.0)):
    """Homotopy h_s on direct sums of perturbed universal pairs."""
    from scipy.linalg import block_diag

    p = cfg["projections"]
    d = p["homotopy_delta"]
    pairs = [universal_generators(t) for t in ts]
    a = block_diag(*[q.a for q in pairs])
    b = block_diag(*[q.b for q in pairs])
    n = a.shape[0]
    a = a + random_selfadjoint(n, rng, d)
    b = b + random_selfadjoint(n, rng, d)
    rep = homotopy_sweep(a, b, p["homotopy_points"])
    return rep


def formula_sweep(cfg, rng):
    p = cfg["projections"]
    worst = 0.0
    for _ in range(p["formula_pairs"]):
        n = int(rng.integers(1, p["formula_max_dim"] + 1))
        a = random_selfadjoint(n, rng, rng.uniform(0.1, 2))
        b = random_selfadjoint(n, rng, rng.uniform(0.1, 2))
        worst = max(worst, np.abs(pdoubleprime_matrix(a, b) - pdoubleprime_factored(a, b)).max())
    return {"pairs": p["formula_pairs"], "max_entry_gap": float(worst)}


def copy_config(cfg, **sections):
    """Copy of ``cfg`` with some table entries replaced."""
    from .config import ExperimentConfig, _merge
    import copy

    data = copy.deepcopy(cfg.data)
    _merge(data, sections)
    return ExperimentConfig(data, cfg.source)
