"""Command-line front end.

Exit codes: 0 on success or a passing report, 1 on failed conditions,
failed verification or a structural error, 2 on I/O or parse errors.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import io
from .cut_classifier import check_conditions, classify
from .edge_topology import build_loops, loops_from_cycles, orient_loops
from .errors import ConfigError, CurveParamError, DegenerateCurve, MeshError
from .parameterization import sample_loops, verify_homeomorphism
from .render import RenderOptions, render_svg
from .triangulation import generate_equilateral_grid

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


@dataclass
class RunConfig:
    """Inputs and outputs of a full pipeline run.

    When ``gen_bbox`` and ``gen_h`` are set the mesh is generated first and
    written to ``mesh_path``.
    """

    mesh_path: str
    curve_path: str
    out_dir: str
    mode: str = "positive"
    samples_per_edge: int = 8
    gen_bbox: tuple | None = None
    gen_h: float | None = None
    render: bool = True
    render_options: RenderOptions = field(default_factory=RenderOptions)

    def __post_init__(self):
        if not self.mesh_path or not self.curve_path or not self.out_dir:
            raise ConfigError("mesh_path, curve_path and out_dir must be nonempty")
        if int(self.samples_per_edge) < 2:
            raise ConfigError("samples_per_edge must be at least 2")
        if self.mode not in ("positive", "negative"):
            raise ConfigError(f"mode must be 'positive' or 'negative', got {self.mode!r}")


def _say(msg, stream=None):
    print(msg, file=stream or sys.stdout)


def run_pipeline(cfg: RunConfig, stream=None) -> int:
    """gen, classify, check, loops, parameterize, verify and render.

    Stops at the first structural error; every report produced up to that
    point stays on disk.
    """
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.gen_bbox is not None and cfg.gen_h is not None:
            io.save_mesh(generate_equilateral_grid(cfg.gen_bbox, cfg.gen_h), cfg.mesh_path)
        tri = io.load_mesh(cfg.mesh_path)
        curve = io.load_curve(cfg.curve_path)
    except (OSError, ConfigError, MeshError, DegenerateCurve) as exc:
        _say(f"error: {exc}", sys.stderr)
        return EXIT_IO

    try:
        cls = classify(curve, tri, mode=cfg.mode)
        io.write_classification(cls, out / "classification.json")
        rep = check_conditions(cls.curve, tri, cls)
        io.write_check_csv(rep, out / "check.csv")
        (out / "check.txt").write_text(io.check_table(rep))
        if not rep.all_pass:
            for r in rep.failing():
                _say(f"triangle {r.triangle}: conditions {r.conds} "
                     f"(sigma C h = {r.value_c:.6f}, limit {r.limit_c:.6f})", stream)
            if not rep.gamma_h_nonempty:
                _say("some curve component is not reached by any positive edge", stream)
        loops = orient_loops(build_loops(cls), cls.curve, tri.vertices)
        io.write_loops(loops, out / "loops.txt")
        samples = sample_loops(cls.curve, tri, loops, cfg.samples_per_edge, rep)
        io.write_samples_csv(samples, out / "samples.csv")
        vr = verify_homeomorphism(cls.curve, tri, cls, rep, loops, samples)
        io.write_verification(vr, out / "verify.txt")
        if cfg.render:
            render_svg(tri, cls, loops, samples, out / "render.svg", options=cfg.render_options)
    except OSError as exc:
        _say(f"error: {exc}", sys.stderr)
        return EXIT_IO
    except CurveParamError as exc:
        _say(f"structural failure: {type(exc).__name__}: {exc}", sys.stderr)
        return EXIT_FAIL
    _say(vr.status, stream)
    return EXIT_OK if vr.global_pass else EXIT_FAIL


def _bbox(text):
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad bbox {text!r}") from None
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("bbox needs x0,y0,x1,y1")
    return vals


def _inputs(p, loops=False):
    p.add_argument("--mesh", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--mode", choices=("positive", "negative"), default="positive")
    if loops:
        p.add_argument("--loops", help="loop dump to use instead of rebuilding loops")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="curveparam",
        description="Parameterize a closed curve over the positive edges of a triangulation.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen-mesh", help="write an equilateral grid covering a box")
    p.add_argument("--bbox", type=_bbox, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--margin", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="positively cut triangles and positive edges (JSON)")
    _inputs(p)
    p.add_argument("--out")

    p = sub.add_parser("check", help="per-triangle mesh conditions")
    _inputs(p)
    p.add_argument("--csv")
    p.add_argument("--out", help="write the text table here instead of stdout")

    p = sub.add_parser("loops", help="closed loops of positive edges")
    _inputs(p)
    p.add_argument("--out")

    p = sub.add_parser("parameterize", help="sample the projection on every loop (CSV)")
    _inputs(p, loops=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="sampled homeomorphism certificate")
    _inputs(p, loops=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--out")

    p = sub.add_parser("render", help="SVG picture")
    _inputs(p, loops=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--whiskers", action="store_true")
    p.add_argument("--no-shade", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="full pipeline into an output directory")
    _inputs(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--outdir", required=True)
    p.add_argument("--bbox", type=_bbox, help="generate the mesh first (with --h)")
    p.add_argument("--h", type=float)
    p.add_argument("--no-render", action="store_true")
    return ap


def _emit(text, path):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _pipeline(args):
    tri = io.load_mesh(args.mesh)
    curve = io.load_curve(args.curve)
    return tri, classify(curve, tri, mode=args.mode)


def _loops(args, cls, tri):
    if getattr(args, "loops", None):
        loops = loops_from_cycles(cls, io.read_loops(args.loops))
    else:
        loops = build_loops(cls)
    return orient_loops(loops, cls.curve, tri.vertices)


def _dispatch(args) -> int:
    if args.cmd == "gen-mesh":
        tri = generate_equilateral_grid(args.bbox, args.h, args.margin)
        io.save_mesh(tri, args.out)
        _say(f"{tri.n_vertices} vertices, {tri.n_triangles} triangles -> {args.out}")
        return EXIT_OK
    if args.cmd == "run":
        cfg = RunConfig(
            mesh_path=args.mesh, curve_path=args.curve, out_dir=args.outdir, mode=args.mode,
            samples_per_edge=args.n, gen_bbox=args.bbox, gen_h=args.h, render=not args.no_render,
        )
        return run_pipeline(cfg)

    tri, cls = _pipeline(args)
    if args.cmd == "classify":
        if args.out:
            io.write_classification(cls, args.out)
        _say(f"{len(cls.cut_triangles)} positively cut triangles, {len(cls.positive_edges)} positive edges")
        return EXIT_OK

    rep = check_conditions(cls.curve, tri, cls)
    if args.cmd == "check":
        if args.csv:
            io.write_check_csv(rep, args.csv)
        _emit(io.check_table(rep), args.out)
        return EXIT_OK if rep.all_pass else EXIT_FAIL

    loops = _loops(args, cls, tri)
    if args.cmd == "loops":
        if args.out:
            io.write_loops(loops, args.out)
        else:
            sys.stdout.write("".join(" ".join(map(str, lp.vertex_cycle)) + "\n" for lp in loops))
        return EXIT_OK

    if args.n < 2:
        raise ConfigError("--n must be at least 2")
    samples = sample_loops(cls.curve, tri, loops, args.n, rep)
    if args.cmd == "parameterize":
        if args.out:
            io.write_samples_csv(samples, args.out)
        _say(f"{sum(len(s) for s in samples)} samples on {len(loops)} loops")
        return EXIT_OK
    if args.cmd == "render":
        opts = RenderOptions(whiskers=args.whiskers, shade_cut=not args.no_shade)
        render_svg(tri, cls, loops, samples, args.out, options=opts)
        return EXIT_OK
    vr = verify_homeomorphism(cls.curve, tri, cls, rep, loops, samples)
    _emit("\n".join(vr.summary_lines()) + "\n", args.out)
    return EXIT_OK if vr.global_pass else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _dispatch(args)
    except (OSError, ConfigError, MeshError, DegenerateCurve) as exc:
        _say(f"error: {exc}", sys.stderr)
        return EXIT_IO
    except CurveParamError as exc:
        _say(f"structural failure: {type(exc).__name__}: {exc}", sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
