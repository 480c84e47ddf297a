"""End-to-end pipeline: design -> flatten -> relax -> arcs -> paths -> G-code -> verify.

Every stage writes its artifact with a ``.partial`` suffix; the suffix is
dropped only when the whole run succeeds, so a failed run leaves the
completed stages inspectable.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import cases
from .errors import TensionNetError, ValidationError
from .flatten import FlattenSpec, find_crossings, flatten, resolve_crossings
from .formfind import solve_form
from .material import load_material, unstretched_lengths
from .netgraph import Network, edge_lengths, load_network, network_to_dict
from .preview import preview_svg
from .relax import (RelaxConfig, edges_to_arcs, fix_leaf_edges, gauss_seidel_relax,
                    movable_leaf_edges, printed_lengths, scale_network)
from .toolpath import PrintConfig, annotate_crossings, decompose_paths, emit_gcode, total_extrusion
from .verify import forward_equilibrium

log = logging.getLogger(__name__)

STAGES = ("form", "flatten", "relax", "arcs", "decompose", "gcode", "verify")

# Per-case settings used by `case` runs and the test fixtures.
CASE_PIPELINES: dict[str, dict[str, Any]] = {
    "unit-cell": {"case_params": {"half_width": 74.2}},
    "spiderweb": {},
    "cylinder-wrap": {"flatten": {"mode": "cylindrical"}, "relax": {"beta": 0.7}},
    "octahedron": {"flatten": {"mode": "cylindrical"}},
}


class StageError(TensionNetError):
    """A stage failed; carries the stage name and the original exit code."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)


@dataclass
class PipelineConfig:
    input: Optional[str] = None  # network file
    case: Optional[str] = None  # or a built-in case name
    case_params: dict = field(default_factory=dict)
    material: Any = "tpu"
    flatten: Optional[dict] = None  # FlattenSpec fields
    resolve: dict = field(default_factory=dict)  # resolve_crossings keywords
    relax: RelaxConfig = field(default_factory=RelaxConfig)
    print: PrintConfig = field(default_factory=PrintConfig)
    stages: tuple = STAGES
    out_dir: str = "out"
    preview: bool = True
    print_struts: bool = False  # struts are usually made separately

    def __post_init__(self):
        if (self.input is None) == (self.case is None):
            raise ValidationError("give exactly one of 'input' or 'case'")
        if self.case is not None and self.case not in cases.CASES:
            raise ValidationError(f"unknown case {self.case!r}; choose from {sorted(cases.CASES)}")
        if self.input is not None and not Path(self.input).is_file():
            raise ValidationError(f"input network {self.input!r} not found")
        self.stages = tuple(self.stages)
        if not self.stages or self.stages != STAGES[: len(self.stages)]:
            raise ValidationError(f"stages must be a prefix of {list(STAGES)}")
        if isinstance(self.relax, dict):
            self.relax = RelaxConfig(**self.relax)
        if isinstance(self.print, dict):
            self.print = PrintConfig(**self.print)
        if self.flatten is not None:
            FlattenSpec(**self.flatten)

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown pipeline keys: {sorted(unknown)}")
        doc = dict(doc)
        base = Path(base_dir) if base_dir is not None else Path(".")
        for key in ("input", "out_dir"):
            if doc.get(key) is not None and not os.path.isabs(doc[key]):
                doc[key] = str(base / doc[key])
        mat = doc.get("material")
        if isinstance(mat, str) and mat.endswith(".json") and not os.path.isabs(mat):
            doc["material"] = str(base / mat)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ValidationError(f"bad pipeline config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read pipeline config {path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=path.parent)

    @classmethod
    def for_case(cls, name: str, out_dir: str = "out", **overrides) -> "PipelineConfig":
        if name not in CASE_PIPELINES:
            raise ValidationError(f"unknown case {name!r}; choose from {sorted(CASE_PIPELINES)}")
        doc = {"case": name, "out_dir": out_dir, **CASE_PIPELINES[name], **overrides}
        return cls.from_dict(doc)


def printed_rest_lengths(design: Network, printed: Network) -> np.ndarray:
    """Rest length per design edge: the printed length where the edge was printed.

    ``printed`` holds either every design edge or only the cables, in design
    order (struts are made separately and keep their design ``l0``).
    """
    rest = np.array(design.l0 if design.l0 is not None else edge_lengths(design), dtype=float)
    if printed.n_edges == design.n_edges:
        idx = np.arange(design.n_edges)
    elif printed.n_edges == int((~design.is_strut).sum()):
        idx = np.flatnonzero(~design.is_strut)
    else:
        raise ValidationError("printed network does not match the design's edges")
    rest[idx] = printed_lengths(printed)
    return rest


def build_case(name: str, params: Optional[dict] = None) -> Network:
    params = params or {}
    if name == "unit-cell":
        return cases.gen_unit_cell(**params)
    if name == "cylinder-wrap":
        return cases.gen_cylinder_wrap(cases.CylinderWrapParams(**params))
    if name == "octahedron":
        return cases.gen_octahedron(cases.OctahedronParams(**params))
    if name == "spiderweb":
        return cases.gen_spiderweb(cases.SpiderwebParams(**params))
    raise ValidationError(f"unknown case {name!r}")


class _Artifacts:
    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        final = self.dir / name
        partial = final.with_name(final.name + ".partial")
        partial.write_text(text)
        self.written.append(final)
        return partial

    def network(self, name: str, network: Network) -> Path:
        return self.write(name, json.dumps(network_to_dict(network), indent=1) + "\n")

    def commit(self) -> None:
        for final in self.written:
            os.replace(final.with_name(final.name + ".partial"), final)


@dataclass
class PipelineResult:
    summary: dict
    design: Network
    final: Optional[Network]
    paths: list
    gcode: Optional[str]
    out_dir: Path


def _summary_text(summary: dict) -> str:
    return "\n".join(f"{k}: {v}" for k, v in summary.items())


def run_pipeline(config: PipelineConfig, echo: bool = True) -> PipelineResult:
    """Run the configured stage prefix, writing artifacts to ``config.out_dir``."""
    art = _Artifacts(Path(config.out_dir))
    material = load_material(config.material)
    summary: dict[str, Any] = {"source": config.case or str(config.input)}
    stage = "load"
    state: dict[str, Any] = {"paths": [], "gcode": None, "final": None}
    try:
        net = build_case(config.case, config.case_params) if config.case else load_network(config.input)

        stage = "form"
        result = solve_form(net)
        l0 = unstretched_lengths(result, material)
        design = result.network.replace(l0=l0)
        state["design"] = design
        art.network("design.json", design)
        summary.update(vertices=design.n_vertices, edges=design.n_edges,
                       max_stress_MPa=round(float(np.max(result.tensions / material.area)), 6))
        if config.preview and design.dimension == 2:
            art.write("design.svg", preview_svg(design, tensions=result.tensions))

        printable = np.ones(design.n_edges, bool)
        if not config.print_struts:
            printable = ~design.is_strut
        work = design if printable.all() else design.subnetwork(printable)
        summary["printed_edges"] = int(printable.sum())

        if "flatten" in config.stages:
            stage = "flatten"
            if config.flatten is not None:
                work = flatten(work, FlattenSpec(**config.flatten))
            elif work.dimension == 3:
                raise ValidationError("3D network needs a flatten spec before relaxation")
            report = find_crossings(work)
            summary["crossings"] = len(report)
            work = resolve_crossings(work, report, **config.resolve)
            summary["duplications"] = len(work.meta.get("duplications", []))
            art.network("flat.json", work)

        if "relax" in config.stages:
            stage = "relax"
            if work.dimension != 2:
                raise ValidationError("relax requires a 2D network; add a flatten spec")
            relaxed = gauss_seidel_relax(work, work.l0, config.relax)
            pinned = work.fixed if config.relax.pin_fixed else None
            scaled, s = scale_network(relaxed, exclude=movable_leaf_edges(relaxed, pinned))
            work = fix_leaf_edges(scaled, pinned=pinned)
            info = relaxed.meta["relax"]
            summary.update(scale=round(s, 6), iterations=info["iterations"],
                           epsilon=float(f"{info['epsilon']:.6g}"), converged=info["converged"])
            after = find_crossings(work)
            summary["crossings_after_relax"] = len(after)
            if len(after):
                log.warning("relaxation introduced %d crossings", len(after))
            art.network("relaxed.json", work)
            buf = [f"{k},{e!r}" for k, e in enumerate(config.relax.epsilon_history)]
            art.write("convergence.csv", "iteration,epsilon\n" + "\n".join(buf) + "\n")

        if "arcs" in config.stages:
            stage = "arcs"
            work = work.replace(arcs=tuple(edges_to_arcs(work)))
            summary["arcs"] = sum(a is not None for a in work.arcs)
            art.network("final.json", work)
            state["final"] = work
            if config.preview:
                art.write("final.svg", preview_svg(work))

        if "decompose" in config.stages:
            stage = "decompose"
            paths = annotate_crossings(decompose_paths(work))
            state["paths"] = paths
            summary["paths"] = len(paths)
            summary["z_hops"] = sum(len(p.crossings) for p in paths)
            if config.preview:
                art.write("paths.svg", preview_svg(paths))

        if "gcode" in config.stages:
            stage = "gcode"
            gcode = emit_gcode(state["paths"], config.print)
            state["gcode"] = gcode
            art.write("print.gcode", gcode)
            summary["filament_mm"] = round(total_extrusion(gcode), 6)

        if "verify" in config.stages:
            stage = "verify"
            res = forward_equilibrium(design, material, l0=printed_rest_lengths(design, work))
            summary["verify_score_percent"] = float(f"{res.score:.6g}")
            summary["verify_max_residual_N"] = float(f"{res.max_residual:.3g}")
            report = res.report(edge_lengths(design))
            report["summary"] = summary
            art.write("report.json", json.dumps(report, indent=1) + "\n")
    except TensionNetError as exc:
        raise StageError(stage, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(stage, exc) from exc

    if "verify" not in config.stages:
        art.write("report.json", json.dumps({"summary": summary}, indent=1) + "\n")
    art.commit()
    if echo:
        print(_summary_text(summary))
    return PipelineResult(summary=summary, design=state["design"], final=state["final"],
                          paths=state["paths"], gcode=state["gcode"], out_dir=art.dir)

