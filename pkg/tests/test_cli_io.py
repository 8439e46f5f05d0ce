import csv
import json
from pathlib import Path

import numpy as np
import pytest

from curveparam import cli, io
from curveparam.curve_geometry import ImplicitCurve, ParametricCurve
from curveparam.cut_classifier import classify
from curveparam.errors import ConfigError
from curveparam.render import render_svg
from curveparam.triangulation import generate_equilateral_grid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="module")
def mesh02(tmp_path_factory):
    p = tmp_path_factory.mktemp("mesh") / "m02.txt"
    assert cli.main(["gen-mesh", "--bbox=-1.3,-1.3,1.3,1.3", "--h", "0.2", "--out", str(p)]) == 0
    return p


def test_config_kinds():
    c = io.load_curve(CONFIGS / "two_circles.cfg")
    assert isinstance(c, ParametricCurve) and c.n_components == 2
    e = io.load_curve(CONFIGS / "ellipse.cfg")
    assert e.reach.r_n == pytest.approx(0.5)
    b = io.load_curve(CONFIGS / "blob.cfg")
    assert b.kind == "spline"
    i = io.load_curve(CONFIGS / "implicit_ellipse.cfg")
    assert isinstance(i, ImplicitCurve)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "[curve]\nkind = square\n",
        "[curve]\nkind = circle\ncenter = 0 0\n",
        "[curve]\nkind = circle\nradius = -1\n",
        "[curve]\nkind = ellipse\nsemi_axes = 1\n",
        "[curve]\nkind = spline\npoints =\n  0 0\n  1 0\n  0 1\n",
        "[curve]\nkind = implicit\nexpr = x**2 + y**2 - 1\nbbox = -2 -2 2 2\n[curve b]\nkind = circle\nradius = 1\n",
        "[curve]\nkind = implicit\nexpr = x**2 + (\nbbox = -2 -2 2 2\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        io.parse_curve_config(text)


def test_mesh_parse_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("3 1\n0 0\n1 0\n")
    with pytest.raises(ConfigError):
        io.load_mesh(p)
    p.write_text("x y\n")
    with pytest.raises(ConfigError):
        io.load_mesh(p)


def test_run_exit_codes(tmp_path, capsys):
    circle_cfg = str(CONFIGS / "circle.cfg")
    rc = cli.main(["run", "--mesh", str(tmp_path / "a.txt"), "--curve", circle_cfg,
                   "--bbox=-1.3,-1.3,1.3,1.3", "--h", "0.2", "--outdir", str(tmp_path / "a")])
    assert rc == 0
    rc = cli.main(["run", "--mesh", str(tmp_path / "b.txt"), "--curve", circle_cfg,
                   "--bbox=-1.3,-1.3,1.3,1.3", "--h", "0.3", "--outdir", str(tmp_path / "b")])
    assert rc == 1
    out = capsys.readouterr().out
    assert "conditions ab-d" in out and "0.742307" in out
    rc = cli.main(["check", "--mesh", str(tmp_path / "missing.txt"), "--curve", circle_cfg])
    assert rc == 2
    rc = cli.main(["check", "--mesh", str(tmp_path / "a.txt"), "--curve", str(tmp_path / "nope.cfg")])
    assert rc == 2
    for name in ("classification.json", "check.csv", "check.txt", "loops.txt",
                 "samples.csv", "verify.txt", "render.svg"):
        assert (tmp_path / "a" / name).exists()


def test_structural_failure_exit_code(tmp_path):
    # curve not covered by the mesh
    small = tmp_path / "small.txt"
    cli.main(["gen-mesh", "--bbox=-0.5,-0.5,0.5,0.5", "--h", "0.2", "--out", str(small)])
    rc = cli.main(["loops", "--mesh", str(small), "--curve", str(CONFIGS / "circle.cfg")])
    assert rc == 1


def test_subcommands_and_outputs(mesh02, tmp_path):
    base = ["--mesh", str(mesh02), "--curve", str(CONFIGS / "circle.cfg")]
    assert cli.main(["classify", *base, "--out", str(tmp_path / "c.json")]) == 0
    data = json.loads((tmp_path / "c.json").read_text())
    assert data["mode"] == "positive" and len(data["positive_edges"]) == len(data["cut_triangles"])

    assert cli.main(["check", *base, "--csv", str(tmp_path / "k.csv"), "--out", str(tmp_path / "k.txt")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "k.csv")))
    assert {r["conds"] for r in rows} == {"abcd"}
    assert rows[0]["k"].isdigit()

    assert cli.main(["loops", *base, "--out", str(tmp_path / "l.txt")]) == 0
    assert len(io.read_loops(tmp_path / "l.txt")) == 1

    assert cli.main(["parameterize", *base, "--n", "8", "--out", str(tmp_path / "s.csv")]) == 0
    rows = list(csv.reader(open(tmp_path / "s.csv")))
    assert rows[0] == io.SAMPLE_COLUMNS
    assert len(rows) - 1 == 9 * len(data["positive_edges"])

    assert cli.main(["verify", *base, "--loops", str(tmp_path / "l.txt"), "--out", str(tmp_path / "v.txt")]) == 0
    assert (tmp_path / "v.txt").read_text().startswith("certified at resolution n=8")
    assert cli.main(["verify", *base, "--mode", "negative", "--out", str(tmp_path / "vn.txt")]) == 0

    assert cli.main(["render", *base, "--whiskers", "--out", str(tmp_path / "r.svg")]) == 0
    svg = (tmp_path / "r.svg").read_text()
    assert svg.startswith("<svg") and svg.count('class="loop"') == 1
    assert cli.main(["parameterize", *base, "--n", "1"]) == 2


def test_outputs_are_deterministic(tmp_path):
    args = ["--curve", str(CONFIGS / "blob.cfg"), "--bbox=-1.4,-1.4,1.4,1.4", "--h", "0.05"]
    cli.main(["run", "--mesh", str(tmp_path / "m1.txt"), *args, "--outdir", str(tmp_path / "o1")])
    cli.main(["run", "--mesh", str(tmp_path / "m2.txt"), *args, "--outdir", str(tmp_path / "o2")])
    for name in ("classification.json", "check.csv", "loops.txt", "samples.csv", "verify.txt", "render.svg"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()


def test_render_empty_and_two_loops(tmp_path):
    from curveparam.curve_geometry import circle, union
    from curveparam.edge_topology import build_loops

    tri = generate_equilateral_grid((-3, -3, 3, 3), 0.5)
    svg = render_svg(tri)
    assert svg.count("<polygon") == tri.n_triangles and "#c8c8c8" not in svg
    two = union(circle((-1.5123, 0.0211), 1.0), circle((1.5371, -0.0173), 1.0))
    tri = generate_equilateral_grid((-2.8, -1.3, 2.8, 1.3), 0.2)
    cls = classify(two, tri)
    svg = render_svg(tri, cls, build_loops(cls), path=tmp_path / "two.svg")
    assert svg.count('class="loop"') == 2
    assert svg.count('data-loop="0"') == 1 and svg.count('data-loop="1"') == 1
    assert svg.count('fill="#c8c8c8"') == len(cls.cut_triangles)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        cli.RunConfig(mesh_path="", curve_path="c", out_dir="o")
    with pytest.raises(ConfigError):
        cli.RunConfig(mesh_path="m", curve_path="c", out_dir="o", samples_per_edge=1)
    with pytest.raises(ConfigError):
        cli.RunConfig(mesh_path="m", curve_path="c", out_dir="o", mode="both")


def test_check_csv_values(tmp_path):
    from curveparam.cut_classifier import check_conditions

    c = io.load_curve(CONFIGS / "circle.cfg")
    tri = generate_equilateral_grid((-1.3, -1.3, 1.3, 1.3), 0.3)
    rep = check_conditions(c, tri, classify(c, tri))
    io.write_check_csv(rep, tmp_path / "k.csv")
    rows = list(csv.DictReader(open(tmp_path / "k.csv")))
    assert all(r["conds"] == "ab-d" for r in rows)
    assert np.allclose([float(r["sigma_C_h"]) for r in rows], 3 ** 0.5 * 0.3 / 0.7)
