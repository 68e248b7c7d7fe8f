"""Experiment configuration: JSON loading, validation and object construction."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigInvalid, DotprodError
from .io import parse_tree_text, read_measure
from .kernels import kernel_eval
from .measures import DEFAULT_C, DiscreteMeasure, cantor_1d, cantor_product, point_measure, shift_to_box, uniform_cube_sample
from .trees import PIVOT_POLICIES, Tree, path_tree, star_tree

EXPERIMENTS = ("gen", "count", "cover", "scaling", "lower", "dim-embed", "lambda", "fourier", "regularity")
# CLI subcommand -> experiment kind
SUBCOMMANDS = {
    "gen": "gen",
    "cover": "cover",
    "count": "count",
    "scale": "scaling",
    "lower": "lower",
    "dim-embed": "dim-embed",
    "lambda": "lambda",
    "fourier": "fourier",
    "regularity": "regularity",
}
PACKAGE_PREFIX = "package:"
_FAMILY = re.compile(r"^(path|star)-(\d+)$")


@dataclass
class ExperimentConfig:
    experiment: str
    measure: dict
    raw: dict
    base_dir: Path
    tree: Tree | None = None
    tree_file: str | None = None
    seed: int = 0
    thresholds: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.raw.get(key, default)


def resolve_path(ref: str, base_dir: Path, where: str) -> Path:
    if ref.startswith(PACKAGE_PREFIX):
        path = Path(str(resources.files("dotprod_trees") / "data" / ref[len(PACKAGE_PREFIX):]))
    else:
        path = Path(ref)
        if not path.is_absolute():
            path = base_dir / path
    if not path.exists():
        raise ConfigInvalid(where, f"file {ref!r} does not exist")
    return path


def tree_from_spec(spec, base_dir: Path, where: str) -> tuple[Tree, str | None]:
    """A named family ('path-k', 'star-k') or a tree file reference."""
    if isinstance(spec, str):
        match = _FAMILY.match(spec)
        if match:
            k = int(match.group(2))
            if k < 1:
                raise ConfigInvalid(where, "named trees need at least one edge")
            return (path_tree(k) if match.group(1) == "path" else star_tree(k)), None
        path = resolve_path(spec, base_dir, where)
        return parse_tree_text(path.read_text(), str(path)), spec
    raise ConfigInvalid(where, "expected 'path-k', 'star-k' or a tree file path")


def _num(d: dict, key: str, where: str, kind=float, default=None, required=True):
    if key not in d:
        if required and default is None:
            raise ConfigInvalid(f"{where}.{key}", "missing")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigInvalid(f"{where}.{key}", f"expected a number, got {val!r}")
    if kind is int and int(val) != val:
        raise ConfigInvalid(f"{where}.{key}", f"expected an integer, got {val!r}")
    return kind(val)


def check_ladder(values, where: str, decreasing: bool = True) -> list[float]:
    if not isinstance(values, list) or not values:
        raise ConfigInvalid(where, "expected a non-empty list of numbers")
    try:
        vals = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigInvalid(where, "expected a list of numbers") from None
    pairs = list(zip(vals, vals[1:]))
    ok = all(b < a for a, b in pairs) if decreasing else all(b > a for a, b in pairs)
    if not ok:
        raise ConfigInvalid(where, f"ladder must be strictly {'decreasing' if decreasing else 'increasing'}")
    return vals


def build_measure(spec: dict, base_dir: Path, seed: int, level: int | None = None, where: str = "measure") -> DiscreteMeasure:
    """Construct the measure described by a config ``measure`` block."""
    if not isinstance(spec, dict):
        raise ConfigInvalid(where, "expected an object")
    family = spec.get("family")
    try:
        if family == "cantor":
            ratio = _num(spec, "ratio", where)
            branches = _num(spec, "branches", where, int)
            lvl = level if level is not None else _num(spec, "level", where, int)
            dims = _num(spec, "dims", where, int, default=1)
            m = cantor_product(ratio, branches, lvl, dims) if dims > 1 else cantor_1d(ratio, branches, lvl)
        elif family == "uniform":
            n = _num(spec, "n", where, int)
            d = _num(spec, "d", where, int)
            c = spec.get("c", DEFAULT_C)
            return uniform_cube_sample(n, d, c, int(spec.get("seed", seed)))
        elif family == "points":
            pts = spec.get("points")
            if not isinstance(pts, list) or not pts:
                raise ConfigInvalid(f"{where}.points", "expected a non-empty list of coordinates")
            m = point_measure(pts, spec.get("weights"))
        elif family == "file":
            path = resolve_path(str(spec.get("path", "")), base_dir, f"{where}.path")
            m = read_measure(path)
        else:
            raise ConfigInvalid(f"{where}.family", f"unknown family {family!r}")
        c = spec.get("c")
        if c is not None:
            m = shift_to_box(m, float(c))
        return m
    except ConfigInvalid:
        raise
    except DotprodError as exc:
        raise ConfigInvalid(where, str(exc)) from exc


def load_config(path, experiment: str | None = None, seed_override: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid(str(path), "config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}:{exc.lineno}", exc.msg) from None
    return parse_config(raw, path.parent, experiment, seed_override)


def parse_config(raw: dict, base_dir: Path, experiment: str | None = None, seed_override: int | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalid("<root>", "config must be a JSON object")
    raw = dict(raw)
    kind = raw.get("experiment", experiment)
    if experiment is not None and kind != experiment:
        raise ConfigInvalid("experiment", f"config declares {kind!r} but the command runs {experiment!r}")
    if kind not in EXPERIMENTS:
        raise ConfigInvalid("experiment", f"unknown experiment {kind!r}; expected one of {EXPERIMENTS}")
    seed = _num(raw, "seed", "<root>", int, default=0, required=False)
    measure = raw.get("measure")
    if not isinstance(measure, dict):
        raise ConfigInvalid("measure", "missing or not an object")
    measure = dict(measure)
    if seed_override is not None:
        seed = seed_override
        if measure.get("family") == "uniform":
            measure["seed"] = seed_override
    if measure.get("family") == "uniform" and "seed" not in measure:
        raise ConfigInvalid("measure.seed", "uniform sampling needs a seed")
    if measure.get("family") == "file":
        resolve_path(str(measure.get("path", "")), base_dir, "measure.path")

    tree = tree_file = None
    needs_tree = kind not in ("gen", "fourier", "regularity")
    spec = raw.get("tree_file", raw.get("tree"))
    if needs_tree:
        if spec is None:
            raise ConfigInvalid("tree_file", "missing tree source")
        tree, tree_file = tree_from_spec(spec, base_dir, "tree_file" if "tree_file" in raw else "tree")

    for key in ("eps_ladder",):
        if key in raw:
            check_ladder(raw[key], key, decreasing=True)
    if "bin_sizes" in raw:
        check_ladder(raw["bin_sizes"], "bin_sizes", decreasing=True)
    if "radii" in raw:
        check_ladder(raw["radii"], "radii", decreasing=True)
    if "levels" in raw:
        check_ladder(raw["levels"], "levels", decreasing=False)
    if "j_range" in raw:
        check_ladder(raw["j_range"], "j_range", decreasing=False)
    policy = raw.get("pivot_policy", "max_degree")
    if policy not in PIVOT_POLICIES:
        raise ConfigInvalid("pivot_policy", f"expected one of {PIVOT_POLICIES}")
    if "kernel" in raw:
        try:
            kernel_eval(raw["kernel"], 1.0, 0.0)
        except DotprodError as exc:
            raise ConfigInvalid("kernel", str(exc)) from None
    if "epsilon" in raw and not _num(raw, "epsilon", "<root>") > 0:
        raise ConfigInvalid("epsilon", "must be positive")
    if raw.get("method", "tree_dp") not in ("tree_dp", "naive", "both"):
        raise ConfigInvalid("method", "expected tree_dp, naive or both")
    thresholds = raw.get("thresholds", {})
    if not isinstance(thresholds, dict):
        raise ConfigInvalid("thresholds", "expected an object")
    cfg = ExperimentConfig(kind, measure, raw, base_dir, tree, tree_file, seed, thresholds)
    build_measure(measure, base_dir, seed)  # fail early on bad parameters
    return cfg
