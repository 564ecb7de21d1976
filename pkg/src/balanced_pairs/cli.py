"""Command line front end.

Exit status: 0 on success, 1 when a checked property fails, 2 for a
configuration error, 3 when a size cap is hit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from . import experiments as ex
from .config import load_config
from .errors import ConfigError, ResourceCapError
from .reports import EXAMPLE_COLUMNS, TRUNCATION_COLUMNS, write_csv, write_json
from .truncation import LIMITS


class CheckFailed(Exception):
    pass


def _monotone(vals):
    return all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def cmd_defects(cfg, out, say):
    results = ex.run_defects(cfg)
    reports = []
    for R, dim, rep, t in results:
        say(f"R={R} dim={dim} eps1={rep.eps1:.6g} eps2={rep.eps2:.6g} eps2prime={rep.eps2prime:.6g}")
        reports.append({"R": R, "dim": dim, **rep.to_json()})
    write_json(out / "defects.json", reports)
    return True


def cmd_truncate(cfg, out, say):
    rows = ex.defect_rows(ex.run_defects(cfg))
    write_csv(out / "truncation.csv", rows, TRUNCATION_COLUMNS)
    for r in rows:
        say(f"R={r['R']} eps1={r['eps1']:.6g} eps2={r['eps2']:.6g} eps2prime={r['eps2prime']:.6g}")
    far = [r for r in rows if r["R"] >= cfg["symbols"]["R0"] + 2]
    ok = all(_monotone([r[k] for r in far]) for k in ("eps1", "eps2", "eps2prime"))
    say(f"nonincreasing beyond R0+2: {ok}")
    return ok


def cmd_projections(cfg, out, say):
    rng = np.random.default_rng(cfg.seed)
    rel = ex.relation_sweep(cfg, rng)
    pp = ex.pprime_sweep(cfg)
    hom = ex.homotopy_check(cfg, rng).to_json()
    fm = ex.formula_sweep(cfg, rng)
    tol = cfg.tol
    checks = {
        "relation_pairs_exact": rel["exact_deviation"] < tol["projection"],
        "perturbation_bound": rel["max_ratio"] <= rel["C"],
        "pprime_equals_pdoubleprime": pp["max_gap"] < tol["projection"],
        "homotopy": hom["ok"],
        "formula_agreement": fm["max_entry_gap"] < tol["formula"],
    }
    write_json(out / "projections.json", {"relation_pairs": rel, "pprime": pp, "homotopy": hom, "formulas": fm,
                                          "checks": checks})
    for k, v in checks.items():
        say(f"{k}: {'ok' if v else 'FAILED'}")
    return all(checks.values())


def cmd_kclass(cfg, out, say):
    report, outs = ex.run_kclass(cfg)
    data = report.to_json()
    data["class_rank"] = [o["class_rank"] for o in outs]
    data["rank_constant"] = [o["rank_constant"] for o in outs]
    write_json(out / "kclass.json", data)
    ok = report.agree and all(o["rank_constant"] for o in outs)
    say(f"rank {outs[-1]['class_rank']}, chern input {report.chern_input}, "
        f"output {[o['chern'] for o in outs]}: {'agree' if ok else 'MISMATCH'}")
    return ok


def cmd_example(cfg, out, say):
    rows = {r["R"]: r for r in ex.defect_rows(ex.run_defects(cfg))}
    conv = ex.run_convergence(cfg)
    for c in conv["rows"]:
        row = rows.setdefault(c["R"], {"R": c["R"], "dim": c["dim"]})
        row["sup_norm_gap"] = c["sup_norm_gap"]
        row["wall_time"] = row.get("wall_time", 0.0) + c["wall_time"]
    table = [rows[R] for R in sorted(rows)]
    write_csv(out / "example.csv", table, EXAMPLE_COLUMNS)
    lip = ex.run_lipschitz(cfg)
    spec = ex.make_group(cfg)
    g = spec.generators()[0]
    from .pipeline import m1_m2

    mm = m1_m2(ex.make_symbols(cfg), g, g, max(cfg["defects"]["radii"]))
    write_json(out / "example.json", {
        "convergence": conv,
        "lipschitz": lip.to_json(),
        "m1_m2": {"g": g, "h": g, "m1": mm.m1, "m2": mm.m2},
    })
    for r in table:
        say("  ".join(f"{k}={r[k]:.6g}" if isinstance(r.get(k), float) else f"{k}={r.get(k, '')}"
                      for k in EXAMPLE_COLUMNS))
    R0 = cfg["symbols"]["R0"]
    gaps = [c["sup_norm_gap"] for c in conv["rows"] if c["R"] > R0]
    ok = _monotone(gaps) and lip.ok
    say(f"convergence nonincreasing beyond R0: {_monotone(gaps)}; Lipschitz bound: {lip.ok}")
    return ok


def cmd_verify_all(cfg, out, say):
    results = acceptance.run_all(cfg, echo=say)
    write_json(out / "acceptance.json", [r.to_json() for r in results])
    return all(r.passed for r in results)


COMMANDS = {
    "defects": (cmd_defects, "epsilon reports over the configured radii"),
    "truncate": (cmd_truncate, "epsilon curve of the truncated pair as CSV"),
    "projections": (cmd_projections, "checks of the P, P', P'' formulas"),
    "kclass": (cmd_kclass, "rank field and Chern numbers over the torus"),
    "example": (cmd_example, "full lattice pipeline with convergence curve"),
    "verify-all": (cmd_verify_all, "run every acceptance criterion"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="balanced-pairs", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--max-dim", type=int, help="cap on matrix dimension")
    common.add_argument("--quiet", action="store_true", help="suppress progress lines")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.max_dim is not None:
        overrides["max_dim"] = args.max_dim
    if args.out is not None:
        overrides["out"] = str(args.out)
    say = (lambda *a: None) if args.quiet else print
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    LIMITS["max_dim"] = cfg["max_dim"]
    out = Path(cfg["out"])
    fn = COMMANDS[args.command][0]
    try:
        ok = fn(cfg, out, say)
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    if not ok:
        print(f"{args.command}: check failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
