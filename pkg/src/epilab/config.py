"""Declarative experiment configurations: parsing, validation, defaults."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .serialize import from_dict

SCHEMA = "epilab-config/1"
DEFAULT_SEED = 20240601
OUTPUT_FORMATS = ("json", "csv")
TOLERANCE_KEYS = ("scale", "floor")

# kind -> (required input fields, optional input fields); fields ending in "dist"
# or "dists" hold serialized distributions
KINDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "epi": (("dists", "coeffs"), ("forms",)),
    "fii": (("dists", "coeffs"), ("forms",)),
    "mii": (("dists", "coeffs"), ("noise_dist",)),
    "mii-rewritten": (("dists", "coeffs", "noise_dist"), ()),
    "cramer-rao": (("dist",), ()),
    "sato": (("dists", "noise_dist"), ("samples",)),
    "dpi": (("prior_dist", "noise1_cov", "matrix", "noise2_cov"), ()),
    "saddlepoint": (("dist", "noise_dist"), ()),
    "contrast": (("dists", "coeffs"), ()),
    "complementary": (("dist",), ()),
    "debruijn": (("dist", "noise_dist"), ()),
    "zf-epi": (("matrix", "marginal_dists"), ("forms",)),
    "zf-fii": (("matrix", "marginal_dists"), ()),
    "zf-mii": (("matrix", "marginal_dists"), ()),
    "dependent-epi": (("joint_dist",), ("t", "coeffs")),
    "lv-epi": (("x1_dist", "x2_dist"), ("a", "alpha")),
    "costa": (("dist",), ("noise_dist",)),
    "subset-epi": (("dists", "coeffs", "subsets"), ("forms", "noise_dist")),
    "gas-mixture": (("weights", "dists"), ("noise_dist",)),
}
# grids each kind understands; values are lists of reals
GRIDS: dict[str, tuple[str, ...]] = {
    "mii": ("t",),
    "complementary": ("noise_var",),
    "debruijn": ("t",),
    "costa": ("t",),
    "dependent-epi": ("t",),
}


IDENTITY_KINDS = ("complementary", "debruijn")


def _form_choices():
    from .extensions.subsets import SUBSET_FORMS
    from .extensions.zamir_feder import ZF_EPI_FORMS
    from .inequalities import EPI_FORMS, FII_FORMS
    return {"epi": EPI_FORMS, "fii": FII_FORMS, "zf-epi": ZF_EPI_FORMS, "subset-epi": SUBSET_FORMS}


def _structure(kind, inputs, where):
    """Build the structured input once so shape errors surface as configuration errors."""
    from .extensions.dependent import DependentPairSpec
    from .extensions.zamir_feder import LinearMixSpec
    from .inequalities import GaussianChain, WeightedFamily
    try:
        if "coeffs" in inputs and kind not in ("dependent-epi",):
            WeightedFamily(inputs["dists"], inputs["coeffs"])
        if "marginal_dists" in inputs:
            LinearMixSpec(inputs["matrix"], inputs["marginal_dists"])
        if kind == "dpi":
            GaussianChain(inputs["prior_dist"], inputs["noise1_cov"], inputs["matrix"], inputs["noise2_cov"])
        if kind == "dependent-epi":
            DependentPairSpec(inputs["joint_dist"], float(inputs.get("t", 1.0)),
                              tuple(inputs.get("coeffs", (2**-0.5, 2**-0.5))))
    except (ValueError, TypeError, NotImplementedError) as exc:
        raise ConfigError(f"{type(exc).__name__}: {exc}", where) from exc
    forms = inputs.get("forms")
    if forms is not None:
        choices = _form_choices().get(kind, ())
        if not isinstance(forms, list) or not forms or any(f not in choices for f in forms):
            raise ConfigError(f"forms must be a nonempty list drawn from {list(choices)}", f"{where}.forms")


def _is_dist_field(name: str) -> bool:
    return name.endswith("_dist") or name.endswith("_dists") or name in ("dist", "dists")


@dataclass(frozen=True)
class Experiment:
    kind: str
    inputs: dict
    grids: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    tolerances: dict = field(default_factory=dict)
    claim: str = "as-stated"
    label: str = ""


@dataclass(frozen=True)
class OutputSpec:
    format: str = "json"
    path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    experiments: tuple = ()
    output: OutputSpec = OutputSpec()
    schema: str = SCHEMA


def _seed(value, where):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", where)
    return value


def _reals(value, where):
    if not isinstance(value, list) or not value:
        raise ConfigError("grid must be a nonempty list of numbers", where)
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError("grid entries must be numbers", f"{where}[{i}]")
    return [float(v) for v in value]


def _inputs(kind, raw, where):
    if not isinstance(raw, dict):
        raise ConfigError("inputs must be an object", where)
    required, optional = KINDS[kind]
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError(f"missing input field(s) {missing} for kind {kind!r}", where)
    extra = sorted(set(raw) - set(required) - set(optional))
    if extra:
        raise ConfigError(f"unexpected input field(s) {extra} for kind {kind!r}", where)
    out = {}
    for key, value in raw.items():
        here = f"{where}.{key}"
        if _is_dist_field(key):
            if key.endswith("dists"):
                if not isinstance(value, list) or not value:
                    raise ConfigError("expected a nonempty list of distributions", here)
                out[key] = [from_dict(v, f"{here}[{i}]") for i, v in enumerate(value)]
            else:
                out[key] = from_dict(value, here)
        else:
            out[key] = value
    _structure(kind, out, where)
    return out


def _experiment(raw, where, default_seed):
    if not isinstance(raw, dict):
        raise ConfigError("an experiment must be an object", where)
    allowed = {"kind", "inputs", "grids", "seed", "tolerances", "claim", "label"}
    extra = sorted(set(raw) - allowed)
    if extra:
        raise ConfigError(f"unexpected field(s) {extra}", where)
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})", f"{where}.kind")
    inputs = _inputs(kind, raw.get("inputs", {}), f"{where}.inputs")
    grids_raw = raw.get("grids", {})
    if not isinstance(grids_raw, dict):
        raise ConfigError("grids must be an object", f"{where}.grids")
    known = GRIDS.get(kind, ())
    grids = {}
    for key, value in grids_raw.items():
        if key not in known:
            raise ConfigError(f"kind {kind!r} takes grids {list(known)}, not {key!r}", f"{where}.grids")
        grids[key] = _reals(value, f"{where}.grids.{key}")
    seed = _seed(raw["seed"], f"{where}.seed") if "seed" in raw else default_seed
    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict) or set(tol) - set(TOLERANCE_KEYS):
        raise ConfigError(f"tolerances may only set {list(TOLERANCE_KEYS)}", f"{where}.tolerances")
    for key, value in tol.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ConfigError("tolerance overrides must be positive numbers", f"{where}.tolerances.{key}")
    claim = raw.get("claim", "as-stated")
    if claim not in ("as-stated", "reversed"):
        raise ConfigError("claim must be 'as-stated' or 'reversed'", f"{where}.claim")
    if claim == "reversed" and kind in IDENTITY_KINDS:
        raise ConfigError("identities cannot be reversed", f"{where}.claim")
    label = raw.get("label", "")
    if not isinstance(label, str):
        raise ConfigError("label must be a string", f"{where}.label")
    return Experiment(kind, inputs, grids, seed, dict(tol), claim, label)


def parse_config(doc: Any, *, default_seed: int = DEFAULT_SEED) -> ExperimentConfig:
    """Validate a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("the configuration must be a JSON object", "$")
    extra = sorted(set(doc) - {"schema", "experiments", "output"})
    if extra:
        raise ConfigError(f"unexpected top-level field(s) {extra}", "$")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r} (expected {SCHEMA!r})", "$.schema")
    exps = doc.get("experiments", [])
    if not isinstance(exps, list):
        raise ConfigError("experiments must be a list", "$.experiments")
    parsed = tuple(_experiment(e, f"$.experiments[{i}]", default_seed) for i, e in enumerate(exps))
    out = doc.get("output", {})
    if not isinstance(out, dict) or set(out) - {"format", "path"}:
        raise ConfigError("output takes only 'format' and 'path'", "$.output")
    fmt = out.get("format", "json")
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"format must be one of {OUTPUT_FORMATS}", "$.output.format")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("path must be a string", "$.output.path")
    return ExperimentConfig(parsed, OutputSpec(fmt, path), schema)


def loads_config(text: str, *, default_seed: int = DEFAULT_SEED) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"line {exc.lineno}, column {exc.colno}") from exc
    return parse_config(doc, default_seed=default_seed)


def load_config(path, *, default_seed: int = DEFAULT_SEED) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", str(p)) from exc
    try:
        return loads_config(text, default_seed=default_seed)
    except ConfigError as exc:
        raise ConfigError(str(exc).removeprefix(f"{exc.where}: ") if exc.where else str(exc),
                          f"{p.name}:{exc.where}" if exc.where else p.name) from exc


def bundled_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package (e.g. 'suite-core')."""
    p = Path(__file__).with_name("configs") / f"{name.removesuffix('.json')}.json"
    if not p.exists():
        available = sorted(q.stem for q in p.parent.glob("*.json"))
        raise ConfigError(f"no bundled configuration {name!r} (available: {', '.join(available)})")
    return p


__all__ = ["SCHEMA", "DEFAULT_SEED", "KINDS", "GRIDS", "Experiment", "OutputSpec", "ExperimentConfig",
           "parse_config", "loads_config", "load_config", "bundled_config_path"]
