"""Stage-driven experiment runner with deterministic report output.

The pipeline walks the configured stage list in order over one shared
context: domination first, then pinching detection, holonomy audit,
measure estimation, exponents, defect scores, the rotation-bump
perturbation, and a re-evaluation of the perturbed cocycle. Every stage
appends its numbers to the bundle; rerunning an identical configuration
reproduces every table byte for byte. Timestamps live only in the
metadata file, never in a table.

A stage that cannot apply (no pinching witness to perturb around) is
recorded as skipped and the run continues; a stage whose inputs are
invalid or whose iteration diverges halts the run with the stage name
and a machine-readable error record on disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import figures
from .cocycle import (
    CocycleBase,
    contraction_exponent,
    domination_check,
    fiber_compose,
    inverse_cocycle,
    measure_exponent,
)
from .config import ExperimentConfig
from .errors import DomainError, NonConvergenceError, PinchlabError, PreconditionError
from .holonomy import axiom_residuals
from .measures import FiberMeasure
from .pinch import build_perturbation, detect_pinching
from .reports import fmt, write_csv, write_run_meta, write_text
from .states import (
    Disintegration,
    estimate_invariant_disintegration,
    family_invariance_residuals,
    state_defect,
)
from .symbolic import format_point, sample_base

_POINT_SEED_TAG = 7001


class StageFailure(PinchlabError):
    """A pipeline stage halted; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class StageRecord:
    stage: str
    status: str  # "ok" or "skipped"
    summary: dict


@dataclass
class Bundle:
    """Everything a run produced, before and after it is written out."""

    out_dir: Path
    records: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # filename -> (header, rows)
    texts: dict = field(default_factory=dict)
    figure_jobs: list = field(default_factory=list)  # (filename, thunk)

    def add_table(self, name: str, header, rows) -> None:
        self.tables[name] = (list(header), [list(r) for r in rows])

    def add_text(self, name: str, text: str) -> None:
        self.texts[name] = text

    def add_figure(self, name: str, thunk) -> None:
        self.figure_jobs.append((name, thunk))

    def summary_lines(self) -> list[str]:
        lines = []
        for rec in self.records:
            parts = [f"{rec.stage}: {rec.status}"]
            parts += [f"{k}={fmt(v)}" for k, v in rec.summary.items()]
            lines.append("  ".join(parts))
        return lines

    def flush(self, render_figures: bool = True, meta: dict | None = None) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for rec in self.records:
            for k, v in rec.summary.items():
                rows.append((rec.stage, rec.status, k, fmt(v)))
        write_csv(self.out_dir / "stages.csv", ("stage", "status", "key", "value"), rows)
        for name, (header, body) in self.tables.items():
            write_csv(self.out_dir / name, header, body)
        for name, text in self.texts.items():
            write_text(self.out_dir / name, text)
        write_text(self.out_dir / "summary.txt", "\n".join(self.summary_lines()) + "\n")
        write_run_meta(self.out_dir / "run_meta.json", meta)
        if render_figures:
            for name, thunk in self.figure_jobs:
                thunk(self.out_dir / "figures" / name)

    def write_error(self, stage: str, err: Exception) -> None:
        import json

        self.out_dir.mkdir(parents=True, exist_ok=True)
        record = {
            "stage": stage,
            "error_type": type(err).__name__,
            "message": str(err),
        }
        with open(self.out_dir / "error.json", "w", encoding="utf-8") as f:
            json.dump(record, f, indent=2, sort_keys=True)
            f.write("\n")


# -- shared context helpers ----------------------------------------------------


def _witness(ctx: dict, cfg: ExperimentConfig):
    if "witness" not in ctx:
        setup = ctx["setup"]
        ctx["witness"] = detect_pinching(setup.cocycle, cfg.parameters.max_period)
    return ctx["witness"]


def _sample_points(ctx: dict, cfg: ExperimentConfig):
    if "points" not in ctx:
        setup = ctx["setup"]
        p = cfg.parameters
        ctx["points"] = [
            sample_base(setup.measure, p.core_length, seed=(cfg.seed, _POINT_SEED_TAG, i))
            for i in range(p.point_count)
        ]
    return ctx["points"]


def _disintegration(ctx: dict, cfg: ExperimentConfig):
    """The estimated family when available, else constant Lebesgue."""
    if "disintegration" in ctx:
        return ctx["disintegration"], "estimated"
    return Disintegration.constant(FiberMeasure.lebesgue()), "lebesgue"


# -- stages ---------------------------------------------------------------------


def _stage_check_domination(ctx, cfg, bundle):
    setup = ctx["setup"]
    rep = domination_check(setup.cocycle, setup.rho, cfg.parameters.domination_threshold)
    ctx["domination"] = rep
    bundle.add_table(
        "domination.csv",
        ("worst", "threshold", "dominated", "window_count"),
        [(rep.worst, rep.threshold, rep.dominated, rep.window_count)],
    )
    return StageRecord("check-domination", "ok",
                       {"dominated": rep.dominated, "worst": rep.worst})


def _stage_find_pinching(ctx, cfg, bundle):
    setup = ctx["setup"]
    w = _witness(ctx, cfg)
    if w is None:
        bundle.add_table(
            "pinching.csv",
            ("found", "point", "period", "attracting", "repelling"),
            [(False, "", "", "", "")],
        )
        return StageRecord("find-pinching", "ok",
                           {"pinching": "none", "max_period": cfg.parameters.max_period})
    g0 = fiber_compose(setup.cocycle, w.point, w.period)
    bundle.add_table(
        "pinching.csv",
        ("found", "point", "period", "attracting", "repelling"),
        [(True, format_point(w.point), w.period, w.attracting, w.repelling)],
    )
    bp, vals = g0.breakpoints.copy(), g0.values.copy()
    att, rep = w.attracting, w.repelling
    bundle.add_figure("return_map.png",
                      lambda p: figures.save_return_map(p, bp, vals, att, rep))
    return StageRecord("find-pinching", "ok", {
        "pinching": format_point(w.point),
        "period": w.period,
        "attracting": w.attracting,
        "repelling": w.repelling,
    })


def _stage_holonomy_audit(ctx, cfg, bundle):
    setup = ctx["setup"]
    p, tol = cfg.parameters, cfg.tolerances
    rows = []
    summary = {}
    audits = []
    for side in ("stable", "unstable"):
        audit = axiom_residuals(setup.cocycle, setup.measure, p.audit_pairs,
                                tol=tol.holonomy, seed=cfg.seed, side=side)
        audits.append(audit)
        for i in range(audit.pair_count):
            rows.append((i, side, audit.truncations[i], audit.iterate_residuals[i],
                         audit.composition_residuals[i], audit.equivariance_residuals[i]))
        summary[f"{side}_max_composition"] = audit.max_composition
        summary[f"{side}_max_equivariance"] = audit.max_equivariance
        summary[f"{side}_max_decay_ratio"] = audit.max_decay_ratio
    bundle.add_table(
        "holonomy_audit.csv",
        ("pair", "side", "truncation", "residual", "axiom_a_residual", "axiom_b_residual"),
        rows,
    )
    cont = [r for audit in audits for r in audit.continuity_rows]
    bundle.add_table(
        "holonomy_continuity.csv",
        ("pair", "base_distance", "holonomy_distance"),
        cont,
    )
    bundle.add_figure("holonomy_continuity.png",
                      lambda pth: figures.save_holonomy_figure(pth, cont))
    ctx["holonomy_audit"] = audits
    return StageRecord("holonomy-audit", "ok", summary)


def _stage_estimate_measure(ctx, cfg, bundle):
    setup = ctx["setup"]
    p = cfg.parameters
    pts = _sample_points(ctx, cfg)
    D = estimate_invariant_disintegration(
        setup.cocycle, setup.measure, p.depth, p.atom_count, points=pts, seed=cfg.seed)
    ctx["disintegration"] = D
    fam = family_invariance_residuals(setup.cocycle, D, pts)
    bundle.add_table(
        "family_residuals.csv",
        ("point", "residual"),
        [(format_point(x), r) for x, r in zip(pts, fam.tolist())],
    )
    atom_rows = []
    atom_sets = []
    for i, x in enumerate(pts):
        m = D.measure_at(x)
        for j, (pos, wt) in enumerate(zip(m.positions.tolist(), m.weights.tolist())):
            atom_rows.append((format_point(x), j, pos, wt))
        atom_sets.append((f"point {i}", m.positions.copy(), m.weights.copy()))
    bundle.add_table(
        "disintegration.csv",
        ("point", "atom", "position", "weight"),
        atom_rows,
    )
    bundle.add_figure("fiber_measures.png",
                      lambda pth: figures.save_atoms_figure(pth, atom_sets))
    return StageRecord("estimate-measure", "ok", {
        "depth": p.depth,
        "atom_count": p.atom_count,
        "points": len(pts),
        "max_family_residual": float(fam.max()),
    })


def _stage_exponent(ctx, cfg, bundle):
    setup = ctx["setup"]
    p = cfg.parameters
    D, source = _disintegration(ctx, cfg)
    est = measure_exponent(setup.cocycle, D, setup.measure,
                           p.exponent_samples, seed=cfg.seed, n_max=p.n_max)
    ctx["exponent"] = est
    bundle.add_table(
        "exponent_samples.csv",
        ("sample", "value"),
        list(enumerate(est.values.tolist())),
    )
    vals, mean, stderr = est.values.copy(), est.mean, est.stderr
    bundle.add_figure("exponent_samples.png",
                      lambda pth: figures.save_exponent_figure(pth, vals, mean, stderr))
    summary = {
        "exponent": est.mean,
        "stderr": est.stderr,
        "samples": est.sample_count,
        "disintegration": source,
    }
    w = _witness(ctx, cfg)
    if w is not None:
        att = contraction_exponent(setup.cocycle, w.point, w.attracting, p.n_max)
        summary["attractor_exponent"] = att.value
        curve_data = [(c.eps, c.sign, c.values.copy()) for c in att.curves]
        bundle.add_figure("attractor_curve.png",
                          lambda pth: figures.save_attractor_curve(pth, curve_data))
        bundle.add_table(
            "attractor_exponent.csv",
            ("eps", "sign", "tail_value", "saturated"),
            [(c.eps, c.sign, c.tail_max(p.n_max), c.saturated) for c in att.curves],
        )
    return StageRecord("exponent", "ok", summary)


def _defect_tables(bundle, prefix, stable_rep, unstable_rep):
    rows = []
    for side, rep in (("stable", stable_rep), ("unstable", unstable_rep)):
        for i, d in enumerate(rep.distances.tolist()):
            rows.append((side, i, d))
    bundle.add_table(f"{prefix}.csv", ("side", "pair", "distance"), rows)
    skipped = [(side, i, reason)
               for rep in (stable_rep, unstable_rep)
               for side, i, reason in rep.skipped]
    if skipped:
        bundle.add_table(f"{prefix}_skipped.csv", ("side", "pair", "reason"), skipped)


def _stage_su_defect(ctx, cfg, bundle):
    setup = ctx["setup"]
    p, tol = cfg.parameters, cfg.tolerances
    D, source = _disintegration(ctx, cfg)
    s = state_defect(setup.cocycle, D, setup.measure, "stable",
                     pair_count=p.defect_pairs, tol=tol.holonomy,
                     seed=cfg.seed, core_length=p.core_length)
    u = state_defect(setup.cocycle, D, setup.measure, "unstable",
                     pair_count=p.defect_pairs, tol=tol.holonomy,
                     seed=cfg.seed, core_length=p.core_length)
    ctx["su_defect"] = (s, u)
    _defect_tables(bundle, "su_defect", s, u)
    sd, ud = s.distances.copy(), u.distances.copy()
    bundle.add_figure("su_defect.png",
                      lambda pth: figures.save_defect_figure(pth, sd, ud))
    return StageRecord("su-defect", "ok", {
        "stable_mean": s.mean, "stable_max": s.max,
        "unstable_mean": u.mean, "unstable_max": u.max,
        "max": max(s.max, u.max),
        "skipped": len(s.skipped) + len(u.skipped),
        "disintegration": source,
    })


def _stage_perturb(ctx, cfg, bundle):
    setup = ctx["setup"]
    p, tol = cfg.parameters, cfg.tolerances
    w = _witness(ctx, cfg)
    if w is None:
        return StageRecord("perturb", "skipped", {
            "reason": f"no pinching witness up to period {p.max_period}"})
    res = build_perturbation(
        setup.cocycle, w, tol.eps, p.bump_outer, p.bump_inner, setup.rho,
        margin=tol.margin, tol=tol.holonomy,
        max_bridge_length=p.max_bridge_length)
    ctx["perturbation"] = res
    manifest = "\n".join([
        f"z={format_point(res.homoclinic.point)}",
        f"k1={res.homoclinic.k_forward}",
        f"k2={res.homoclinic.k_backward}",
        f"outer_exponent={res.bump.outer_exponent}",
        f"inner_exponent={res.bump.inner_exponent}",
        f"delta={fmt(float(res.choice))}",
        f"eps={fmt(res.eps)}",
        f"distance={fmt(res.distance)}",
        f"separation={fmt(res.choice.separation)}",
        f"rotation_residual={fmt(res.rotation_residual)}",
        f"unstable_residual={fmt(res.unstable_residual)}",
        f"displacement={fmt(res.displacement)}",
    ]) + "\n"
    bundle.add_text("perturbation_manifest.txt", manifest)
    bundle.add_table(
        "perturbation.csv",
        ("z", "k1", "k2", "outer_exponent", "inner_exponent", "delta", "eps",
         "distance", "separation", "rotation_residual", "unstable_residual",
         "displacement"),
        [(format_point(res.homoclinic.point), res.homoclinic.k_forward,
          res.homoclinic.k_backward, res.bump.outer_exponent,
          res.bump.inner_exponent, float(res.choice), res.eps, res.distance,
          res.choice.separation, res.rotation_residual, res.unstable_residual,
          res.displacement)],
    )
    bump = res.bump
    agreements = list(range(0, bump.inner_exponent + 2))
    heights = [bump.profile_level(a) for a in agreements]
    delta = float(res.choice)
    bundle.add_figure("bump_profile.png",
                      lambda pth: figures.save_bump_figure(pth, agreements, heights, delta))
    return StageRecord("perturb", "ok", {
        "distance": res.distance,
        "eps": res.eps,
        "delta": float(res.choice),
        "separation": res.choice.separation,
    })


def _stage_re_evaluate(ctx, cfg, bundle):
    setup = ctx["setup"]
    p, tol = cfg.parameters, cfg.tolerances
    res = ctx.get("perturbation")
    if res is None:
        return StageRecord("re-evaluate", "skipped", {
            "reason": "no perturbation available"})
    G = res.cocycle
    Dg = estimate_invariant_disintegration(
        G, setup.measure, p.depth, p.atom_count, seed=cfg.seed)
    fwd = measure_exponent(G, Dg, setup.measure,
                           p.exponent_samples, seed=cfg.seed, n_max=p.n_max)
    Gi = inverse_cocycle(G)
    mui = setup.measure.reversed()
    Dgi = estimate_invariant_disintegration(
        Gi, mui, p.depth, p.atom_count, seed=cfg.seed)
    bwd = measure_exponent(Gi, Dgi, mui,
                           p.exponent_samples, seed=cfg.seed, n_max=p.n_max)
    s = state_defect(G, Dg, setup.measure, "stable",
                     pair_count=p.defect_pairs, tol=tol.holonomy,
                     seed=cfg.seed, core_length=p.core_length)
    u = state_defect(G, Dg, setup.measure, "unstable",
                     pair_count=p.defect_pairs, tol=tol.holonomy,
                     seed=cfg.seed, core_length=p.core_length)
    _defect_tables(bundle, "re_evaluate_defect", s, u)
    bundle.add_table(
        "re_evaluate.csv",
        ("exponent_forward", "stderr_forward", "exponent_backward",
         "stderr_backward", "defect_mean", "defect_max"),
        [(fwd.mean, fwd.stderr, bwd.mean, bwd.stderr,
          float(np.mean(np.concatenate([s.distances, u.distances]))),
          max(s.max, u.max))],
    )
    summary = {
        "exponent_forward": fwd.mean,
        "stderr_forward": fwd.stderr,
        "exponent_backward": bwd.mean,
        "stderr_backward": bwd.stderr,
        "defect_max": max(s.max, u.max),
    }
    return StageRecord("re-evaluate", "ok", summary)


STAGES = {
    "check-domination": _stage_check_domination,
    "find-pinching": _stage_find_pinching,
    "holonomy-audit": _stage_holonomy_audit,
    "estimate-measure": _stage_estimate_measure,
    "exponent": _stage_exponent,
    "su-defect": _stage_su_defect,
    "perturb": _stage_perturb,
    "re-evaluate": _stage_re_evaluate,
}


def run_pipeline(cfg: ExperimentConfig, render_figures: bool = True) -> Bundle:
    """Execute the configured stages and write the report bundle.

    Returns the bundle after writing it under the configured output
    directory. Raises StageFailure when a stage halts; the partial
    bundle and the machine-readable error record are written first.
    """
    setup = cfg.setup()
    ctx = {"setup": setup}
    bundle = Bundle(Path(cfg.out_dir))
    meta = {"setup": setup.name, "seed": cfg.seed, "stages": list(cfg.stages)}
    for stage in cfg.stages:
        fn = STAGES.get(stage)
        if fn is None:
            raise DomainError(f"unknown stage {stage!r}")
        try:
            record = fn(ctx, cfg, bundle)
        except (DomainError, PreconditionError, NonConvergenceError) as err:
            bundle.write_error(stage, err)
            bundle.flush(render_figures, meta)
            raise StageFailure(stage, err) from err
        bundle.records.append(record)
    bundle.flush(render_figures, meta)
    return bundle
