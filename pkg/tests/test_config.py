import json

import pytest

from epilab.config import (DEFAULT_SEED, KINDS, bundled_config_path, load_config, loads_config, parse_config)
from epilab.errors import ConfigError

LAPLACE = {"type": "laplace", "loc": 0.0, "scale": 0.7071067811865476}
GAUSS = {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]}


def one(kind, inputs, **extra):
    return {"schema": "epilab-config/1", "experiments": [{"kind": kind, "inputs": inputs, **extra}]}


def test_empty():
    cfg = parse_config({})
    assert cfg.experiments == () and cfg.output.format == "json"


def test_defaults_and_seed():
    cfg = parse_config(one("epi", {"dists": [LAPLACE, GAUSS], "coeffs": [1, 1]}))
    exp = cfg.experiments[0]
    assert exp.seed == DEFAULT_SEED and exp.claim == "as-stated"
    assert parse_config(one("epi", {"dists": [LAPLACE, GAUSS], "coeffs": [1, 1]}), default_seed=7).experiments[0].seed == 7


@pytest.mark.parametrize("doc,where", [
    ({"experiments": [{"kind": "nope"}]}, "$.experiments[0].kind"),
    (one("epi", {"dists": [LAPLACE]}), "$.experiments[0].inputs"),
    (one("epi", {"dists": [LAPLACE, {"type": "laplace"}], "coeffs": [1, 1]}), "$.experiments[0].inputs.dists[1]"),
    (one("epi", {"dists": [LAPLACE, GAUSS], "coeffs": [1, 1], "forms": ["7z"]}), "$.experiments[0].inputs.forms"),
    (one("epi", {"dists": [LAPLACE, GAUSS], "coeffs": [1]}), "$.experiments[0].inputs"),
    (one("mii", {"dists": [LAPLACE], "coeffs": [1]}, grids={"s": [1]}), "$.experiments[0].grids"),
    (one("mii", {"dists": [LAPLACE], "coeffs": [1]}, grids={"t": []}), "$.experiments[0].grids.t"),
    (one("mii", {"dists": [LAPLACE], "coeffs": [1]}, seed=-1), "$.experiments[0].seed"),
    (one("mii", {"dists": [LAPLACE], "coeffs": [1]}, tolerances={"scale": 0}), "$.experiments[0].tolerances.scale"),
    (one("debruijn", {"dist": LAPLACE, "noise_dist": GAUSS}, claim="reversed"), "$.experiments[0].claim"),
    ({"schema": "epilab-config/9"}, "$.schema"),
    ({"output": {"format": "xml"}}, "$.output.format"),
    ({"bogus": 1}, "$"),
])
def test_validation_paths(doc, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert exc.value.where == where


def test_json_syntax_error_has_line():
    with pytest.raises(ConfigError) as exc:
        loads_config('{\n  "experiments": [,]\n}')
    assert exc.value.where.startswith("line 2")


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"experiments": [{"kind": "x"}]}))
    with pytest.raises(ConfigError) as exc:
        load_config(p)
    assert exc.value.where.startswith("bad.json:")


def test_bundled_configs_parse():
    for name in ("suite-core", "reversed-epi"):
        cfg = load_config(bundled_config_path(name))
        assert cfg.experiments
        assert {e.kind for e in cfg.experiments} <= set(KINDS)
    with pytest.raises(ConfigError):
        bundled_config_path("nope")
