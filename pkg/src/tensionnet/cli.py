"""Command line: one subcommand per stage plus `case` and `pipeline`.

Stages read and write the common JSON network format so they compose through
files.  Exit codes: 0 ok, 2 invalid input, 3 numerical failure,
4 not manufacturable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import TensionNetError, ValidationError
from .flatten import CYLINDRICAL, SPHERICAL, FlattenSpec, find_crossings, flatten, resolve_crossings
from .formfind import solve_form
from .material import load_material, unstretched_lengths
from .netgraph import edge_lengths, load_network, save_network
from .pipeline import (CASE_PIPELINES, PipelineConfig, build_case, printed_rest_lengths,
                       run_pipeline)
from .preview import preview_svg
from .relax import (RelaxConfig, edges_to_arcs, fix_leaf_edges, gauss_seidel_relax,
                    movable_leaf_edges, scale_network)
from .toolpath import CHORDS, NATIVE, PrintConfig, annotate_crossings, decompose_paths, emit_gcode
from .verify import forward_equilibrium


def _floats(text: str, n: int) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return vals


def _vec3(text: str) -> tuple:
    return _floats(text, 3)


def _print_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("printing")
    g.add_argument("--layer-height", type=float)
    g.add_argument("--nozzle", type=float, help="nozzle diameter, mm")
    g.add_argument("--layers-per-edge", type=int)
    g.add_argument("--arc-mode", choices=[CHORDS, NATIVE])


def _print_config(args, base: PrintConfig = None) -> PrintConfig:
    fields = {}
    if base is not None:
        fields = {k: getattr(base, k) for k in base.__dataclass_fields__}
        if args.nozzle is not None:
            # derived defaults follow the new nozzle
            fields.pop("hop_lead")
            fields.pop("overlap")
    if args.layer_height is not None:
        fields["layer_height"] = args.layer_height
    if args.nozzle is not None:
        fields["nozzle_diameter"] = args.nozzle
    if args.layers_per_edge is not None:
        fields["layers_per_edge"] = args.layers_per_edge
    if args.arc_mode is not None:
        fields["arc_mode"] = args.arc_mode
    return PrintConfig(**fields)


def _case_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--param expects key=value, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def cmd_case(args) -> None:
    net = build_case(args.name, _case_params(args.param))
    save_network(net, args.out)
    print(f"{args.name}: {net.n_vertices} vertices, {net.n_edges} edges -> {args.out}")


def cmd_form(args) -> None:
    net = load_network(args.input)
    res = solve_form(net)
    material = load_material(args.material)
    l0 = unstretched_lengths(res, material)
    save_network(res.network.replace(l0=l0), args.out)
    sigma = res.tensions / material.area
    print(f"tension {res.tensions.min():.6g}..{res.tensions.max():.6g} N, "
          f"stress max {sigma.max():.6g} MPa -> {args.out}")


def cmd_flatten(args) -> None:
    net = load_network(args.input)
    if args.cables_only:
        net = net.subnetwork(~net.is_strut)
    net = flatten(net, FlattenSpec(args.center, args.axis, args.mode))
    report = find_crossings(net)
    if not args.no_resolve:
        net = resolve_crossings(net, report)
    save_network(net, args.out)
    print(f"mean radius {net.meta['flatten']['mean_radius']:.6g}, crossings {len(report)}, "
          f"duplications {len(net.meta.get('duplications', []))} -> {args.out}")


def cmd_relax(args) -> None:
    net = load_network(args.input)
    cfg = RelaxConfig(beta=args.beta, tau=args.tau, max_iter=args.max_iter, pin_fixed=args.pin_fixed)
    relaxed = gauss_seidel_relax(net, None, cfg)
    pinned = net.fixed if cfg.pin_fixed else None
    scaled, s = scale_network(relaxed, exclude=movable_leaf_edges(relaxed, pinned))
    final = fix_leaf_edges(scaled, pinned=pinned)
    save_network(final, args.out)
    if args.history:
        cfg.write_history_csv(args.history)
    info = relaxed.meta["relax"]
    print(f"iterations {info['iterations']}, epsilon {info['epsilon']:.6g}, s {s:.6f} -> {args.out}")


def cmd_arcs(args) -> None:
    net = load_network(args.input)
    arcs = edges_to_arcs(net)
    save_network(net.replace(arcs=tuple(arcs)), args.out)
    print(f"{sum(a is not None for a in arcs)} arcs, {net.n_edges} edges -> {args.out}")


def _paths_doc(paths) -> list:
    return [{"edges": p.edges, "vertices": p.vertices, "length": p.length,
             "crossings": list(p.crossings)} for p in paths]


def cmd_decompose(args) -> None:
    paths = annotate_crossings(decompose_paths(load_network(args.input)))
    text = json.dumps(_paths_doc(paths), indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"{len(paths)} paths, {sum(len(p.crossings) for p in paths)} crossings")


def cmd_gcode(args) -> None:
    net = load_network(args.input)
    cfg = _print_config(args, PrintConfig(extrusion_ratio=load_material(args.material).extrusion_ratio))
    gcode = emit_gcode(annotate_crossings(decompose_paths(net)), cfg)
    Path(args.out).write_text(gcode)
    print(f"{len(gcode.splitlines())} lines -> {args.out}")


def cmd_verify(args) -> None:
    design = load_network(args.design)
    material = load_material(args.material)
    rest = printed_rest_lengths(design, load_network(args.input)) if args.input else design.l0
    res = forward_equilibrium(design, material, l0=rest, tol=args.tol)
    report = res.report(edge_lengths(design))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    print(f"score {res.score:.6g} %, max residual {res.max_residual:.3g} N, {res.method}")


def cmd_preview(args) -> None:
    net = load_network(args.input)
    tensions = None
    if args.tensions:
        tensions = net.q * edge_lengths(net)
    preview_svg(net, out=args.out, tensions=tensions)
    print(f"-> {args.out}")


def cmd_pipeline(args) -> None:
    if args.config:
        cfg = PipelineConfig.load(args.config)
        if args.out:
            cfg.out_dir = args.out
    elif args.case:
        cfg = PipelineConfig.for_case(args.case, out_dir=args.out or f"out/{args.case}")
    else:
        raise ValidationError("pipeline needs --config or --case")
    cfg.print = _print_config(args, cfg.print)
    run_pipeline(cfg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tensionnet", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("case", help="write a built-in network")
    p.add_argument("name", choices=sorted(CASE_PIPELINES))
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_case)

    p = sub.add_parser("form", help="force density form-finding and unstretched lengths")
    p.add_argument("input")
    p.add_argument("--material", default="tpu")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_form)

    p = sub.add_parser("flatten", help="unroll a 3D network and resolve crossings")
    p.add_argument("input")
    p.add_argument("--mode", choices=[CYLINDRICAL, SPHERICAL], default=CYLINDRICAL)
    p.add_argument("--center", type=_vec3, default=(0.0, 0.0, 0.0), metavar="X,Y,Z")
    p.add_argument("--axis", type=_vec3, default=(0.0, 0.0, 1.0), metavar="X,Y,Z")
    p.add_argument("--no-resolve", action="store_true")
    p.add_argument("--cables-only", action="store_true", help="drop struts (printed separately)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("relax", help="relax toward l0, scale, fix leaf edges")
    p.add_argument("input")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--pin-fixed", action="store_true")
    p.add_argument("--history", help="write the error trace as CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("arcs", help="replace short chords by arcs of length l0")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_arcs)

    p = sub.add_parser("decompose", help="split into continuous print paths")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gcode", help="emit G-code for a final network")
    p.add_argument("input")
    p.add_argument("--material", default="tpu")
    p.add_argument("--out", required=True)
    _print_args(p)
    p.set_defaults(func=cmd_gcode)

    p = sub.add_parser("verify", help="forward equilibrium of the printed lengths")
    p.add_argument("input", nargs="?", help="final printed network (default: design l0)")
    p.add_argument("--design", required=True)
    p.add_argument("--material", default="tpu")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("preview", help="SVG of a planar network")
    p.add_argument("input")
    p.add_argument("--tensions", action="store_true", help="color edges by q * length")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("pipeline", help="run every stage from a config file or case")
    p.add_argument("--config")
    p.add_argument("--case", choices=sorted(CASE_PIPELINES))
    p.add_argument("--out", help="output directory")
    _print_args(p)
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except TensionNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ValidationError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
