"""Command-line front end: single runs, convergence studies, Wulff export.

Every experiment from the accompanying study set is expressible as one
invocation. Config values come from an optional key=value text file plus
flag overrides; flags win. Exit codes: 0 success, 2 configuration error,
3 solver error (with a machine-readable JSON error report), 4
geometry/diagnostics error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .anisotropy import AnisotropyModel, wulff_shape
from .basis import Basis
from .curves import initial_curve, load_curve_csv, reference_solution
from .diagnostics import (
    CSV_HEADER,
    DiagnosticsCollector,
    sample_polygon,
)
from .errors import (
    ConfigError,
    CurveDefinitionError,
    GeometryError,
    LDGFlowError,
    SolverError,
)
from .mesh import make_mesh
from .polygons import manifold_distance, read_polygon_csv, write_polygon_csv
from .solver import FlowParams, initial_state, run, save_state
from .svg import render_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GEOMETRY = 4


@dataclass
class ExperimentConfig:
    """Resolved settings for one evolution run."""

    curve: str = "ellipse"
    curve_file: Optional[str] = None
    flow: str = "csf"
    beta: float = 0.0
    fold: int = 4
    gamma_file: Optional[str] = None
    degree: int = 1
    ncells: int = 80
    tau: Optional[float] = None
    tau_rule_c: Optional[float] = None
    alpha: Optional[str] = "1/h"
    T: float = 0.25
    n_q: Optional[int] = None
    out: str = "out"
    snap_every: Optional[int] = None
    svg: bool = False
    points_per_cell: int = 300
    ellipse_speed: str = "standard"

    def validate(self):
        if self.tau is not None and self.tau_rule_c is not None:
            raise ConfigError("tau and tau-rule-C are mutually exclusive")
        if self.tau is None and self.tau_rule_c is None:
            raise ConfigError("one of tau or tau-rule-C is required")

    def resolved_tau(self):
        if self.tau is not None:
            return self.tau
        return self.tau_rule_c * (1.0 / self.ncells) ** (self.degree + 1)

    def resolved_alpha(self):
        """Penalty: a number, or the literal token 1/h resolved on the mesh."""
        if self.alpha is None or self.alpha == "1/h":
            return None  # FlowParams resolves None to 1/h
        try:
            value = float(self.alpha)
        except ValueError:
            raise ConfigError(f"alpha must be a number or '1/h', got {self.alpha!r}")
        return value

    def anisotropy(self):
        if self.gamma_file:
            return _load_gamma_module(self.gamma_file)
        return AnisotropyModel.lfold(self.beta, self.fold)

    def curve_spec(self):
        if self.curve_file:
            return load_curve_csv(self.curve_file)
        kind = self.curve
        try:
            if kind == "ellipse":
                return initial_curve("ellipse", speed=self.ellipse_speed)
            return initial_curve(kind)
        except CurveDefinitionError as exc:
            raise ConfigError(str(exc)) from exc

    def flow_params(self):
        return FlowParams(
            flow=self.flow,
            tau=self.resolved_tau(),
            T=self.T,
            anisotropy=self.anisotropy(),
            alpha=self.resolved_alpha(),
            n_q=self.n_q,
        )


def _load_gamma_module(path):
    """Custom surface energy from a python file defining gamma/dgamma/d2gamma."""
    import importlib.util

    spec = importlib.util.spec_from_file_location("ldgflow_custom_gamma", path)
    if spec is None or spec.loader is None:
        raise ConfigError(f"cannot load gamma file {path!r}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    try:
        return AnisotropyModel.custom(module.gamma, module.dgamma, module.d2gamma)
    except AttributeError as exc:
        raise ConfigError(
            f"gamma file {path!r} must define gamma, dgamma and d2gamma"
        ) from exc


_CONFIG_KEYS = {
    "curve": str,
    "curve_file": str,
    "flow": str,
    "beta": float,
    "fold": int,
    "gamma_file": str,
    "k": ("degree", int),
    "N": ("ncells", int),
    "tau": float,
    "tau_rule_C": ("tau_rule_c", float),
    "alpha": str,
    "T": float,
    "nq": ("n_q", int),
    "out": str,
    "snap_every": int,
    "svg": bool,
    "points_per_cell": int,
    "ellipse_speed": str,
}


def load_config_file(path):
    """Parse a key = value config file ('#' comments, blank lines allowed)."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        spec = _CONFIG_KEYS[key]
        attr, typ = spec if isinstance(spec, tuple) else (key, spec)
        try:
            values[attr] = val.lower() in ("1", "true", "yes") if typ is bool else typ(val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def build_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    overrides = {
        "curve": args.curve,
        "curve_file": args.curve_file,
        "flow": args.flow,
        "beta": args.beta,
        "fold": args.fold,
        "gamma_file": args.gamma_file,
        "degree": args.k,
        "ncells": args.N,
        "tau": args.tau,
        "tau_rule_c": args.tau_rule_C,
        "alpha": args.alpha,
        "T": args.T,
        "n_q": args.nq,
        "out": args.out,
        "snap_every": args.snap_every,
        "svg": args.svg or None,
        "points_per_cell": args.points_per_cell,
        "ellipse_speed": args.ellipse_speed,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "tau" in values and values.get("tau_rule_c") is not None and args.tau is not None:
        values.pop("tau_rule_c", None)  # explicit --tau beats a config file rule
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def _normalize_flow(value):
    v = value.lower().replace("-", "")
    if v in ("csf",):
        return "csf"
    if v in ("apcsf",):
        return "apcsf"
    raise ConfigError(f"flow must be csf or ap-csf, got {value!r}")


def run_experiment(cfg):
    """Execute one evolution and write its output files; returns final state."""
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    mesh = make_mesh(cfg.ncells)
    basis = Basis(cfg.degree)
    params = cfg.flow_params()
    spec = cfg.curve_spec()
    state = initial_state(spec, mesh, basis, params)
    alpha = params.resolve_alpha(mesh)
    collector = DiagnosticsCollector(params.anisotropy, alpha, params.n_q)
    collector.observe(state)
    tau = params.tau
    step_of = {"count": 0}

    def observer(st):
        step_of["count"] += 1
        collector.observe(st)
        m = step_of["count"]
        if cfg.snap_every and m % cfg.snap_every == 0:
            _emit_snapshot(cfg, outdir, st, m)

    if cfg.snap_every:
        _emit_snapshot(cfg, outdir, state, 0)
    final = run(state, params, observer)
    if cfg.snap_every and step_of["count"] % cfg.snap_every != 0:
        _emit_snapshot(cfg, outdir, final, step_of["count"])
    _write_series(collector.records, outdir / "series.csv")
    write_polygon_csv(
        sample_polygon(final, cfg.points_per_cell), outdir / "final_polygon.csv"
    )
    return final, collector


def _emit_snapshot(cfg, outdir, state, step):
    save_state(state, outdir / f"snap_{step}.json")
    if cfg.svg:
        poly = sample_polygon(state, max(2, min(cfg.points_per_cell, 50)))
        render_svg(outdir / f"snap_{step}.svg", [(poly.vertices, {})])


def _write_series(records, path):
    """Records plus the normalized energy columns."""
    wc0 = records[0].Wc
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + ",Wc_over_Wc0,W1_over_Wc0,W2_over_Wc0\n")
        for r in records:
            fh.write(
                f"{r.t:.17g},{r.Wc:.17g},{r.W1:.17g},{r.W2:.17g},"
                f"{r.A:.17g},{r.dA:.17g},{r.Psi:.17g},"
                f"{r.Wc / wc0:.17g},{r.W1 / wc0:.17g},{r.W2 / wc0:.17g}\n"
            )


@dataclass
class ConvergenceReport:
    """Rows of (ncells, error, order); the first row has no order."""

    rows: list = field(default_factory=list)

    def add(self, ncells, error):
        order = None
        if self.rows:
            n_prev, e_prev, _ = self.rows[-1]
            order = convergence_order(e_prev, error, n_prev, ncells)
        self.rows.append((ncells, error, order))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("N,error,order\n")
            for n, e, order in self.rows:
                fh.write(f"{n},{e:.17g},{'' if order is None else f'{order:.17g}'}\n")

    def pretty(self):
        lines = [f"{'N':>6s} {'error':>12s} {'order':>7s}"]
        for n, e, order in self.rows:
            lines.append(
                f"{n:6d} {e:12.4e} {'-' if order is None else f'{order:7.2f}'}"
            )
        return "\n".join(lines)


def convergence_order(err_coarse, err_fine, n_coarse, n_fine):
    """Observed order ln(e1/e2)/ln(N2/N1); handles non-doubled N."""
    return math.log(err_coarse / err_fine) / math.log(n_fine / n_coarse)


def convergence_study(
    cfg,
    ncells_list,
    truth="exact",
    ref_ncells=640,
    ref_degree=4,
    ref_tau=1e-5,
    points_per_cell=300,
):
    """Errors at T for a sequence of meshes against the exact or reference curve.

    truth='exact' uses the shrinking circle (isotropic CSF from the unit
    circle only); truth='reference' runs the scheme at the reference
    resolution first.
    """
    from .curves import shrinking_circle
    from .polygons import Polygon

    if len(ncells_list) < 2 or sorted(ncells_list) != list(ncells_list):
        raise ConfigError("study needs a strictly increasing N list of length >= 2")
    spec = cfg.curve_spec()
    if truth == "exact":
        if cfg.flow != "csf" or cfg.curve != "circle" or cfg.beta != 0.0:
            raise ConfigError(
                "truth=exact requires the isotropic CSF from the unit circle"
            )
        def truth_polygon(nverts):
            return Polygon(shrinking_circle(cfg.T, np.arange(nverts) / nverts))

        ref_poly = None
    elif truth == "reference":
        base = cfg.flow_params()
        ref_poly = reference_solution(
            spec,
            base,
            ref_ncells,
            ref_degree,
            ref_tau,
            study_ncells=ncells_list,
        )
        def truth_polygon(nverts):
            return ref_poly
    else:
        raise ConfigError(f"truth must be exact or reference, got {truth!r}")

    report = ConvergenceReport()
    for n in ncells_list:
        mesh = make_mesh(n)
        basis = Basis(cfg.degree)
        tau = (
            cfg.tau
            if cfg.tau is not None
            else cfg.tau_rule_c * mesh.h ** (cfg.degree + 1)
        )
        params = FlowParams(
            flow=cfg.flow,
            tau=tau,
            T=cfg.T,
            anisotropy=cfg.anisotropy(),
            alpha=cfg.resolved_alpha(),
            n_q=cfg.n_q,
        )
        final = run(initial_state(spec, mesh, basis, params), params)
        poly = sample_polygon(final, points_per_cell)
        err = manifold_distance(poly, truth_polygon(len(poly.vertices)))
        report.add(n, err)
    return report


def _parser():
    p = argparse.ArgumentParser(
        prog="ldgflow",
        description="High-order local DG solver for curve-shortening flows",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_shared(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--curve", choices=["circle", "ellipse", "flower", "mikula"])
        sp.add_argument("--curve-file", help="tabulated rho,x,y CSV curve")
        sp.add_argument("--flow", type=_normalize_flow, help="csf or ap-csf")
        sp.add_argument("--beta", type=float, help="l-fold anisotropy strength")
        sp.add_argument("--fold", type=int, help="l-fold symmetry number")
        sp.add_argument("--gamma-file", help="python file with gamma/dgamma/d2gamma")
        sp.add_argument("--k", type=int, help="polynomial degree (1..4)")
        sp.add_argument("--N", type=int, help="cell count")
        sp.add_argument("--tau", type=float, help="time step")
        sp.add_argument(
            "--tau-rule-C", type=float, help="time step rule tau = C h^(k+1)"
        )
        sp.add_argument("--alpha", help="penalty coefficient (number or 1/h)")
        sp.add_argument("--T", type=float, help="final time")
        sp.add_argument("--nq", type=int, help="volume quadrature points")
        sp.add_argument("--out", help="output directory")
        sp.add_argument(
            "--points-per-cell", type=int, help="polygon samples per cell"
        )
        sp.add_argument(
            "--ellipse-speed",
            choices=["standard", "uniform"],
            help="ellipse parameterization speed profile",
        )

    rp = sub.add_parser("run", help="run one evolution with diagnostics")
    add_shared(rp)
    rp.add_argument("--snap-every", type=int, help="state snapshot cadence (steps)")
    rp.add_argument("--svg", action="store_true", default=None,
                    help="also render SVG snapshots")

    sp = sub.add_parser("study", help="convergence study over a mesh sequence")
    add_shared(sp)
    sp.add_argument("--N-list", required=True,
                    help="comma-separated increasing cell counts")
    sp.add_argument("--truth", choices=["exact", "reference"], default="exact")
    sp.add_argument("--ref-N", type=int, default=640)
    sp.add_argument("--ref-k", type=int, default=4)
    sp.add_argument("--ref-tau", type=float, default=1e-5)

    wp = sub.add_parser("wulff", help="export or compare the equilibrium shape")
    wp.add_argument("--beta", type=float, required=True)
    wp.add_argument("--fold", type=int, default=4)
    wp.add_argument("--area", type=float, default=math.pi,
                    help="target enclosed area")
    wp.add_argument("--samples", type=int, default=4096)
    wp.add_argument("--out", default="wulff.csv", help="output CSV path")
    wp.add_argument("--compare", help="polygon CSV to compare (manifold distance)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = build_config(args)
            if args.snap_every is not None:
                cfg.snap_every = args.snap_every
            final, _ = run_experiment(cfg)
            print(f"done: t = {final.time:.17g}, outputs in {cfg.out}/")
            return EXIT_OK
        if args.command == "study":
            cfg = build_config(args)
            ncells = [int(s) for s in args.N_list.split(",")]
            report = convergence_study(
                cfg,
                ncells,
                truth=args.truth,
                ref_ncells=args.ref_N,
                ref_degree=args.ref_k,
                ref_tau=args.ref_tau,
                points_per_cell=cfg.points_per_cell,
            )
            outdir = Path(cfg.out)
            outdir.mkdir(parents=True, exist_ok=True)
            report.to_csv(outdir / "study.csv")
            print(report.pretty())
            return EXIT_OK
        if args.command == "wulff":
            model = AnisotropyModel.lfold(args.beta, args.fold)
            poly = wulff_shape(model, args.samples, args.area)
            write_polygon_csv(poly, args.out)
            print(f"wulff shape ({len(poly.vertices)} vertices) -> {args.out}")
            if args.compare:
                other = read_polygon_csv(args.compare)
                print(f"manifold distance: {manifold_distance(poly, other):.17g}")
            return EXIT_OK
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CurveDefinitionError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        report = {
            "error": type(exc).__name__,
            "message": str(exc),
            "step": exc.step,
            "time": exc.time,
            "residual": getattr(getattr(exc, "last_state", None), "residual", None),
        }
        print(json.dumps(report), file=sys.stderr)
        return EXIT_SOLVER
    except (GeometryError, LDGFlowError) as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
