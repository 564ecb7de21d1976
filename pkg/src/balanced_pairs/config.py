"""Experiment configuration loaded from TOML."""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

DEFAULTS = {
    "seed": 0,
    "max_dim": 200_000,
    "out": "results",
    "group": {"kind": "free_abelian", "rank": 2},
    "symbols": {"kind": "bott", "R0": 6.5, "winding": 1, "profile": "linear"},
    "cover": {"n_arcs": 3, "overlap": 1 / 6},
    "defects": {"radii": [4, 6, 8, 12], "F_radius": 1},
    "convergence": {"radii": [4, 6, 8, 12], "R_star": 16, "grid": 6},
    "kclass": {"R": 12, "grids": [24, 48], "input_grid": 160},
    "projections": {
        "random_pairs": 100,
        "max_blocks": 4,
        "deltas": [1e-1, 1e-2, 1e-3],
        "t_points": 1001,
        "homotopy_points": 101,
        "homotopy_delta": 1e-3,
        "formula_pairs": 100,
        "formula_max_dim": 16,
    },
    "casewise": {"samples": 200, "R": 6, "pair_radius": 2},
    "tolerances": {
        "exact": 1e-12,
        "projection": 1e-10,
        "formula": 1e-12,
        "casewise": 1e-12,
        "m1m2": 1e-10,
        "convergence_final": 0.1,
    },
}

SECTIONS = [k for k, v in DEFAULTS.items() if isinstance(v, dict)]


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    source: str | None = None

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self):
        return self.data["seed"]

    @property
    def tol(self):
        return self.data["tolerances"]


def _merge(base, over, path=""):
    for key, val in over.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown field '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"field '{where}' must be a table")
            _merge(base[key], val, where + ".")
        else:
            base[key] = val


def _require(cond, where, msg):
    if not cond:
        raise ConfigError(f"field '{where}': {msg}")


def _increasing(vals, where):
    _require(isinstance(vals, list) and vals, where, "expected a nonempty list")
    _require(all(isinstance(v, int) and v >= 0 for v in vals), where, "expected nonnegative integers")
    _require(all(b > a for a, b in zip(vals, vals[1:])), where, "radii must be strictly increasing")


def validate(d):
    g = d["group"]
    _require(g["kind"] in ("free_abelian", "free"), "group.kind", "free_abelian or free")
    _require(isinstance(g["rank"], int) and g["rank"] >= 1, "group.rank", "positive integer")
    s = d["symbols"]
    _require(s["kind"] in ("bott", "identity", "disk"), "symbols.kind", "bott, identity or disk")
    _require(s["R0"] > 0, "symbols.R0", "must be positive")
    _require(s["profile"] in ("linear", "smoothstep"), "symbols.profile", "linear or smoothstep")
    if s["kind"] == "bott":
        _require(g["kind"] == "free_abelian" and g["rank"] == 2, "group",
                 "bott symbols need free_abelian rank 2")
    c = d["cover"]
    _require(isinstance(c["n_arcs"], int) and c["n_arcs"] >= 1, "cover.n_arcs", "positive integer")
    _require(0 < c["overlap"] <= 1 / max(c["n_arcs"], 1), "cover.overlap", "must lie in (0, 1/n_arcs]")
    _increasing(d["defects"]["radii"], "defects.radii")
    _require(isinstance(d["defects"]["F_radius"], int) and d["defects"]["F_radius"] >= 0,
             "defects.F_radius", "nonnegative integer")
    _increasing(d["convergence"]["radii"], "convergence.radii")
    _require(d["convergence"]["R_star"] > max(d["convergence"]["radii"]), "convergence.R_star",
             "must exceed every radius")
    _increasing(d["kclass"]["grids"], "kclass.grids")
    for key, val in d["tolerances"].items():
        _require(isinstance(val, (int, float)) and val > 0, f"tolerances.{key}", "must be > 0")
    _require(isinstance(d["seed"], int) and d["seed"] >= 0, "seed", "nonnegative integer")
    _require(isinstance(d["max_dim"], int) and d["max_dim"] > 0, "max_dim", "positive integer")


def load_config(path=None, overrides=None):
    """Defaults, then the TOML file, then ``overrides`` (a nested dict)."""
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        try:
            raw = tomllib.loads(p.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read {p}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: {exc}") from None
        _merge(data, raw)
    if overrides:
        _merge(data, overrides)
    try:
        validate(data)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"invalid value: {exc}") from None
    return ExperimentConfig(data, None if path is None else str(path))
