import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dotprod_trees.cli import main
from dotprod_trees.config import load_config, parse_config
from dotprod_trees.errors import ConfigInvalid
from dotprod_trees.io import (
    certificate_from_dict,
    certificate_to_dict,
    dumps,
    parse_tree_text,
    read_measure,
    read_tree,
    write_measure,
    write_tree,
)
from dotprod_trees.measures import cantor_1d, cantor_product, point_measure, shift_to_box, uniform_cube_sample
from dotprod_trees.runner import describe, run
from dotprod_trees.trees import is_isomorphic, path_tree, symmetric_cover
from test_trees import random_trees


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


CANTOR4 = {"family": "cantor", "ratio": 0.25, "branches": 3, "level": 4, "dims": 2, "c": 0.3}


@settings(max_examples=40)
@given(random_trees())
def test_tree_file_round_trip(tmp_path_factory, tree):
    path = tmp_path_factory.mktemp("t") / "x.tree"
    write_tree(path, tree)
    assert read_tree(path) == tree


@pytest.mark.parametrize(
    "m",
    [
        cantor_1d(1 / 3, 2, 5),
        shift_to_box(cantor_product(0.25, 3, 2, 2), 0.3),
        uniform_cube_sample(200, 3, 0.3, 9),
        point_measure([[0.1, 0.2], [0.3, 0.4], [1 / 3, 2 / 3]], [1, 2, 4]),
    ],
    ids=["cantor", "product", "uniform", "points"],
)
def test_measure_round_trip(tmp_path, m):
    write_measure(tmp_path / "m.csv", m)
    back = read_measure(tmp_path / "m.csv")
    assert back.equals(m)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_json_floats_round_trip(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_json_non_finite():
    assert json.loads(dumps([math.inf, -math.inf])) == ["inf", "-inf"]


def test_certificate_round_trip():
    cover, cert = symmetric_cover(path_tree(3))
    back = certificate_from_dict(json.loads(dumps(certificate_to_dict(cert))))
    assert back.verify(path_tree(3), cover)


def test_cycle_names_edge_and_line():
    text = "vertices 3\n0 1\n# comment\n1 2\n2 0\n"
    with pytest.raises(ConfigInvalid) as exc:
        parse_tree_text(text, "tri.tree")
    assert exc.value.field == "tri.tree:5"
    assert "(0, 2)" in str(exc.value) or "(2, 0)" in str(exc.value)


@pytest.mark.parametrize(
    "text, where",
    [
        ("verts 3\n", "x:1"),
        ("vertices 3\n0 1\n1 x\n", "x:3"),
        ("vertices 3\n0 1 2\n", "x:2"),
        ("vertices 3\n0 1\n", "x"),
        ("vertices 3\n0 1\n1 1\n", "x:3"),
    ],
)
def test_tree_parse_errors(text, where):
    with pytest.raises(ConfigInvalid) as exc:
        parse_tree_text(text, "x")
    assert exc.value.field == where


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"experiment": "nope"}, "experiment"),
        ({"measure": None}, "measure"),
        ({"measure": {"family": "uniform", "n": 10, "d": 2}}, "measure.seed"),
        ({"measure": {"family": "cantor", "ratio": 0.25, "branches": 3}}, "measure.level"),
        ({"measure": {"family": "cantor", "ratio": 0.5, "branches": 3, "level": 2}}, "measure"),
        ({"measure": {"family": "file", "path": "missing.csv"}}, "measure.path"),
        ({"measure": {"family": "blob"}}, "measure.family"),
        ({"tree": None}, "tree_file"),
        ({"tree": "ring-4"}, "tree"),
        ({"eps_ladder": [0.1, 0.2]}, "eps_ladder"),
        ({"eps_ladder": "fast"}, "eps_ladder"),
        ({"levels": [3, 2]}, "levels"),
        ({"pivot_policy": "random"}, "pivot_policy"),
        ({"seed": 1.5}, "<root>.seed"),
        ({"kernel": "gaussian"}, "kernel"),
        ({"epsilon": -0.1}, "epsilon"),
        ({"epsilon": "small"}, "<root>.epsilon"),
        ({"method": "fast"}, "method"),
    ],
)
def test_config_errors_carry_field(tmp_path, patch, field):
    cfg = {"experiment": "scaling", "seed": 0, "measure": dict(CANTOR4), "tree": "path-2"}
    cfg.update(patch)
    cfg = {k: v for k, v in cfg.items() if v is not None}
    with pytest.raises(ConfigInvalid) as exc:
        load_config(write_cfg(tmp_path, cfg))
    assert exc.value.field == field


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "experiment": "count",\n  oops\n}')
    with pytest.raises(ConfigInvalid) as exc:
        load_config(p)
    assert exc.value.field.endswith(":3")


def test_cli_count_fixture(tmp_path, capsys):
    cfg = {
        "experiment": "count",
        "measure": {"family": "file", "path": "package:two_point.csv"},
        "tree": "path-1",
        "t_spec": 0.0,
        "epsilon": 0.1,
        "method": "both",
    }
    out = tmp_path / "out"
    assert main(["count", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(out)]) == 0
    res = json.loads((out / "result.json").read_text())
    assert res["value"] == 0.5 and res["oracle_value"] == 0.5
    assert {"value", "method", "tree_file", "measure_meta", "gaps", "elapsed_seconds", "kernel_evals"} <= set(res)
    assert res["elapsed_seconds"] is None
    assert "elapsed_seconds=" in (out / "run.log").read_text()


def test_cli_cover_fixture(tmp_path):
    cfg = {
        "experiment": "cover",
        "measure": {"family": "file", "path": "package:two_point.csv"},
        "tree_file": "package:p4.tree",
    }
    out = tmp_path / "out"
    assert main(["cover", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(out)]) == 0
    cover = read_tree(out / "cover.tree")
    assert is_isomorphic(cover, path_tree(4))
    cert = certificate_from_dict(json.loads((out / "certificate.json").read_text()))
    assert cert.verify(path_tree(3), cover)


def test_cli_cycle_exits_nonzero(tmp_path, capsys):
    (tmp_path / "tri.tree").write_text("vertices 3\n0 1\n1 2\n2 0\n")
    cfg = {"experiment": "cover", "measure": {"family": "points", "points": [[0.5, 0.5]]}, "tree_file": "tri.tree"}
    code = main(["cover", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code != 0
    assert "tri.tree:4" in err and "(0, 2)" in err


def test_cli_wrong_subcommand(tmp_path, capsys):
    cfg = {"experiment": "cover", "measure": dict(CANTOR4), "tree": "path-3"}
    code = main(["scale", "--config", str(write_cfg(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert code != 0 and "experiment" in capsys.readouterr().err


def test_describe_examples(tmp_path, monkeypatch):
    cfg = parse_config({"experiment": "scaling", "measure": dict(CANTOR4), "tree": "path-2"}, tmp_path)
    plan = describe(cfg)
    assert plan["n"] == 6561 and plan["k"] == 2
    assert plan["dp_kernel_evals_per_epsilon"] == 2 * 6561**2
    assert not plan["flags"]
    naive = parse_config(
        {"experiment": "count", "measure": dict(CANTOR4), "tree": "path-2", "method": "naive", "epsilon": 0.1}, tmp_path
    )
    assert any("TupleSpaceTooLarge" in f for f in describe(naive)["flags"])
    fourier = parse_config(
        {"experiment": "fourier", "seed": 1, "measure": {"family": "uniform", "n": 50, "d": 3, "seed": 1}}, tmp_path
    )
    assert any("DimensionTooHigh" in f for f in describe(fourier)["flags"])


def test_cli_describe(tmp_path, capsys):
    cfg = {"experiment": "scaling", "measure": dict(CANTOR4), "tree": "path-2"}
    assert main(["describe", "--config", str(write_cfg(tmp_path, cfg))]) == 0
    text = capsys.readouterr().out
    assert "n=6561" in text and "k=2" in text


def test_gen_round_trip_and_seed_override(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "gen", "seed": 3, "measure": {"family": "uniform", "n": 64, "d": 2, "seed": 3}})
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed-override", "4"]) == 0
    a = read_measure(tmp_path / "a" / "measure.csv")
    b = read_measure(tmp_path / "b" / "measure.csv")
    assert a.equals(uniform_cube_sample(64, 2, 0.3, 3))
    assert b.equals(uniform_cube_sample(64, 2, 0.3, 4))


@pytest.mark.parametrize(
    "cfg",
    [
        {"experiment": "count", "measure": dict(CANTOR4, level=2), "tree": "star-3", "epsilon": 0.05, "method": "both"},
        {"experiment": "regularity", "measure": {"family": "cantor", "ratio": 1 / 3, "branches": 2, "level": 6},
         "radii": [0.3, 0.1, 0.03]},
        {"experiment": "lambda", "measure": dict(CANTOR4, level=2), "tree": "path-1", "bin_sizes": [0.1, 0.05]},
    ],
    ids=["count", "regularity", "lambda"],
)
def test_repeat_runs_byte_identical(tmp_path, cfg):
    loaded = parse_config(cfg, tmp_path)
    run(loaded, tmp_path / "a")
    run(loaded, tmp_path / "b", threads=2)
    assert (tmp_path / "a" / "result.json").read_bytes() == (tmp_path / "b" / "result.json").read_bytes()


def test_count_per_edge_targets(tmp_path):
    cfg = {
        "experiment": "count",
        "measure": dict(CANTOR4, level=2),
        "tree": "path-2",
        "epsilon": 0.1,
        "method": "both",
        "t_spec": {"edges": [[0, 1, 0.6], [1, 2, 0.8]]},
    }
    res = run(parse_config(cfg, tmp_path), tmp_path / "o")
    assert res["value"] == pytest.approx(res["oracle_value"], rel=1e-9)
    with pytest.raises(ConfigInvalid) as exc:
        run(parse_config(dict(cfg, t_spec={"edges": [[0, 1, 0.6]]}), tmp_path), tmp_path / "p")
    assert exc.value.field == "t_spec.edges"

