"""Batch command line front end.

``lindskin run --config cfg.json`` executes one task; ``lindskin <task> [flags]``
builds the same configuration from inline flags (optionally on top of a base
``--config``). Results are written only after every computation succeeded.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Callable

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import TASKS, RunConfig, load_config
from .errors import CapacityError, LindskinError, ModelError, NumericalError
from .model import build_h_eff, build_h_post, spectrum
from .output import csv_text, json_text
from .spectral import eigvals, multiset_distance, negation_asymmetry
from .svg import Arrow, Panel, Series, emit_svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAPACITY = 0, 2, 3, 4
CHECK_TOL = 1e-8

_KIND = {"post": "postselected", "eff": "effective-fermion", "z": "z"}


class ConfigError(Exception):
    pass


class Context:
    def __init__(self, cfg: RunConfig, workers: int, timestamp: bool):
        self.cfg = cfg
        self.workers = workers
        self.timestamp = timestamp
        self.meta = {
            "tool": f"lindskin {__version__}",
            "task": cfg.task,
            "config_sha256": cfg.digest(),
            "parameters": json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":")),
        }
        if cfg.model.type == "hatano_nelson":
            flags = cfg.model.build()[0].flags
            if flags:
                self.meta["model_flags"] = ",".join(flags)

    def name(self, suffix: str) -> str:
        prefix = self.cfg.prefix
        return f"{prefix}_{suffix}" if prefix else suffix

    def bloch(self):
        model = self.cfg.model
        if model.type != "hatano_nelson":
            raise ConfigError(f"task {self.cfg.task!r} needs a translation-invariant "
                              "(hatano_nelson) model")
        return model.build()[1]


# --- tasks ---------------------------------------------------------------------

def _task_spectrum(ctx: Context) -> dict[str, str]:
    model, _ = ctx.cfg.model.build()
    post = build_h_post(model)
    rows = []
    for label, mat in (("post", post.matrix), ("eff", build_h_eff(model).matrix)):
        ev = spectrum(mat).eigenvalues
        rows += [(label, n, z.real, z.imag) for n, z in enumerate(ev)]
    meta = dict(ctx.meta, post_constant=f"{post.constant.real!r},{post.constant.imag!r}")
    header = ("matrix", "index", "re_eigenvalue", "im_eigenvalue")
    return {ctx.name("spectrum.csv"): csv_text(header, rows, meta)}


def _task_winding(ctx: Context) -> dict[str, str]:
    from .topology import BlochEvaluator, resolve_energy, winding_number_adaptive

    cfg = ctx.cfg
    ev = BlochEvaluator(ctx.bloch(), _KIND[cfg.matrix])
    e_ref = resolve_energy(cfg.e_ref if cfg.e_ref == "centroid" else complex(*cfg.e_ref),
                           ev, cfg.k_grid)
    rep = winding_number_adaptive(ev, e_ref, cfg.k_grid)
    payload = {"matrix": cfg.matrix, "e_ref": e_ref, "winding": rep.winding,
               "gap_margin": float(rep.gap_margin), "k_grid": rep.k_grid,
               "phase_defect": float(rep.phase_defect)}
    return {ctx.name("winding.json"): json_text(payload, ctx.meta)}


def _skin_profiles(cfg: RunConfig):
    from .topology import skin_profile

    model, _ = cfg.model.build("open")
    out = {}
    for label, mat in (("post", build_h_post(model).matrix), ("eff", build_h_eff(model).matrix)):
        spec = spectrum(mat)
        out[label] = (spec, skin_profile(spec, cfg.skin_threshold))
    return model, out


def _task_skin(ctx: Context) -> dict[str, str]:
    _, prof = _skin_profiles(ctx.cfg)
    dp, de = prof["post"][1], prof["eff"][1]
    rows = [(x + 1, a, b) for x, (a, b) in enumerate(zip(dp.density, de.density))]
    summary = {label: {"center_of_mass": p.center_of_mass, "side": p.side}
               for label, (_, p) in prof.items()}
    return {
        ctx.name("skin.csv"): csv_text(("site", "n_post", "n_eff"), rows, ctx.meta),
        ctx.name("skin.json"): json_text(summary, ctx.meta),
    }


def _task_phase_diagram(ctx: Context) -> dict[str, str]:
    from .topology import HatanoNelsonFamily, phase_diagram

    cfg = ctx.cfg
    if cfg.model.type != "hatano_nelson":
        raise ConfigError("phase-diagram needs a hatano_nelson model family")
    policy = cfg.e_ref if cfg.e_ref == "centroid" else complex(*cfg.e_ref)
    cells = phase_diagram(HatanoNelsonFamily(cfg.model.t, cfg.model.variant),
                          cfg.gamma_l_values, cfg.gamma_g_values, policy, cfg.k_grid,
                          workers=ctx.workers)
    header = ("gamma_l", "gamma_g", "nu_post", "nu_eff", "nu_Z", "gap_post", "gap_eff", "status")
    rows = [(c.gamma_l, c.gamma_g, c.nu_post, c.nu_eff, c.nu_z, c.gap_post, c.gap_eff, c.status)
            for c in cells]
    return {ctx.name("phase_diagram.csv"): csv_text(header, rows, ctx.meta)}


def _task_thirdq_check(ctx: Context) -> dict[str, str]:
    from .thirdq import VECTORIZED_MAX_SITES, rapidities, solve_lyapunov, superoperator

    model, _ = ctx.cfg.model.build()
    sup = superoperator(model)
    lam = rapidities(sup)
    eps = eigvals(build_h_eff(model).matrix)
    rap_dev = multiset_distance(lam, np.concatenate([eps, -eps.conj()]))
    pairing = negation_asymmetry(eigvals(sup.l_bdg))
    x = solve_lyapunov(sup)
    ny = max(np.linalg.norm(sup.y), np.finfo(float).tiny)
    nx = max(np.linalg.norm(x), np.finfo(float).tiny)
    resid = np.linalg.norm(sup.z @ x + x @ sup.z.T + 2 * sup.y) / ny
    antisym = np.linalg.norm(x + x.T) / nx
    payload = {"n_sites": model.n_sites, "rapidities": [complex(v) for v in lam],
               "rapidity_identity_deviation": rap_dev, "pairing_asymmetry": pairing,
               "lyapunov_relative_residual": float(resid),
               "lyapunov_relative_antisymmetry": float(antisym)}
    checks = [rap_dev <= CHECK_TOL, pairing <= CHECK_TOL, resid <= 1e-10, antisym <= 1e-10]
    if model.n_sites <= VECTORIZED_MAX_SITES:
        agree = float(np.max(np.abs(x - solve_lyapunov(sup, "vectorized")), initial=0.0))
        payload["lyapunov_method_disagreement"] = agree
        checks.append(agree <= 1e-9)
    payload["passed"] = bool(all(checks))
    files = {ctx.name("thirdq.json"): json_text(payload, ctx.meta)}
    if not payload["passed"]:
        raise _PartialFailure(files, "third-quantization consistency checks failed")
    return files


def _task_oracle_check(ctx: Context) -> dict[str, str]:
    from .oracle import build_liouvillian, even_sector_spectrum, even_subset_sums, steady_state
    from .thirdq import rapidities, superoperator

    model, _ = ctx.cfg.model.build()
    liou = build_liouvillian(model)
    exact = even_sector_spectrum(liou)
    sums = even_subset_sums(rapidities(superoperator(model)))
    dev = multiset_distance(exact, sums)
    payload = {"n_sites": model.n_sites, "subset_sum_deviation": dev,
               "min_abs_eigenvalue": float(np.abs(exact).min()),
               "max_imag": float(exact.imag.max())}
    files = {}
    try:
        ness = steady_state(liou)
        payload["steady_state_unique"] = True
        rows = [(i + 1, v) for i, v in enumerate(ness.occupations)]
        files[ctx.name("steady_state.csv")] = csv_text(("site", "occupation"), rows, ctx.meta)
    except NumericalError as exc:
        payload["steady_state_unique"] = False
        payload["steady_state_error"] = str(exc)
    payload["passed"] = bool(dev <= CHECK_TOL and payload["min_abs_eigenvalue"] <= CHECK_TOL
                             and payload["max_imag"] <= 1e-10)
    files[ctx.name("oracle.json")] = json_text(payload, ctx.meta)
    if not payload["passed"]:
        raise _PartialFailure(files, "exact-oracle subset-sum check failed")
    return files


def _task_dynamics(ctx: Context) -> dict[str, str]:
    from .oracle import (MAX_SITES, build_liouvillian, evolve_covariance, evolve_exact,
                         fock_state)

    cfg = ctx.cfg
    model, _ = cfg.model.build()
    n = model.n_sites
    t = cfg.times()
    method = cfg.dynamics_method
    if method == "auto":
        method = "exact" if n <= MAX_SITES else "covariance"
    if method == "exact":
        traj = evolve_exact(build_liouvillian(model), fock_state(cfg.occupied, n), t)
    else:
        c0 = np.zeros((n, n), dtype=complex)
        for s in cfg.occupied:
            c0[s - 1, s - 1] = 1
        traj = evolve_covariance(model, c0, t)
    rows = [(tt, i + 1, traj.occupations[a, i]) for a, tt in enumerate(traj.times) for i in range(n)]
    meta = dict(ctx.meta, method=method)
    return {ctx.name("trajectory.csv"): csv_text(("t", "site", "occupation"), rows, meta)}


def _spectrum_panel(title, curve, obc, e_ref, nu) -> Panel:
    closed = np.append(curve, curve[0])
    series = [Series("PBC", closed.real, closed.imag, style="line"),
              Series("OBC", obc.real, obc.imag, style="points")]
    # arrow from the reference energy towards the k=0 point of the PBC curve
    tip = 0.5 * (curve[0] - e_ref)
    label = "gap closed" if nu is None else f"nu={nu:+d}"
    return Panel(title, series, "Re E", "Im E", [Arrow(e_ref.real, e_ref.imag, tip.real, tip.imag, label)])


def _task_figure2(ctx: Context) -> dict[str, str]:
    from .errors import GapClosedError, GridTooCoarseError
    from .topology import BlochEvaluator, k_points, resolve_energy, winding_number_adaptive

    cfg = ctx.cfg
    bloch = ctx.bloch()
    model, prof = _skin_profiles(cfg)
    k = k_points(256)
    panels = []
    for label, title in (("post", "H_post spectrum"), ("eff", "H_eff spectrum")):
        ev = BlochEvaluator(bloch, _KIND[label])
        curve = np.asarray(ev(k))[:, 0, 0]
        e_ref = resolve_energy(cfg.e_ref if cfg.e_ref == "centroid" else complex(*cfg.e_ref),
                               ev, cfg.k_grid)
        try:
            nu = winding_number_adaptive(ev, e_ref, cfg.k_grid).winding
        except (GapClosedError, GridTooCoarseError):
            nu = None
        panels.append(_spectrum_panel(title, curve, prof[label][0].eigenvalues, e_ref, nu))
    x = np.arange(1, model.n_sites + 1)
    for label in ("post", "eff"):
        p = prof[label][1]
        panels.append(Panel(f"n_{label}(x), {p.side}", [Series(f"n_{label}", x, p.density, style="points")],
                            "site x", f"n_{label}"))
    meta = dict(ctx.meta)
    if ctx.timestamp:
        meta["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    title = f"gamma_l={cfg.model.gamma_l:g}, gamma_g={cfg.model.gamma_g:g}, t={cfg.model.t:g}"
    return {ctx.name("figure2.svg"): emit_svg(panels, title, meta)}


class _PartialFailure(NumericalError):
    def __init__(self, files, message):
        self.files = files
        super().__init__(message)


TASK_RUNNERS: dict[str, Callable[[Context], dict[str, str]]] = {
    "spectrum": _task_spectrum,
    "winding": _task_winding,
    "skin": _task_skin,
    "phase-diagram": _task_phase_diagram,
    "thirdq-check": _task_thirdq_check,
    "oracle-check": _task_oracle_check,
    "dynamics": _task_dynamics,
    "figure2": _task_figure2,
}


# --- driver ----------------------------------------------------------------------

def _check_writable(out_dir: Path):
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out_dir, prefix=".probe-"):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {out_dir} is not writable: {exc}") from exc


def _write(out_dir: Path, files: dict[str, str]) -> list[Path]:
    paths = []
    for name in sorted(files):
        p = out_dir / name
        p.write_text(files[name], encoding="utf-8", newline="\n")
        paths.append(p)
    return paths


def run(cfg: RunConfig, workers: int | None = None, timestamp: bool = True) -> list[Path]:
    """Execute one configured task and write its artifacts; raises on failure."""
    out_dir = Path(cfg.out_dir)
    _check_writable(out_dir)
    ctx = Context(cfg, workers or os.cpu_count() or 1, timestamp)
    try:
        files = TASK_RUNNERS[cfg.task](ctx)
    except _PartialFailure as exc:
        _write(out_dir, exc.files)
        raise
    return _write(out_dir, files)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _e_ref(text: str):
    if text == "centroid":
        return text
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError("expected 'centroid' or 're,im'")
    return vals


# config path -> inline flag name and parser
_MODEL_FLAGS = {"t": float, "gamma_l": float, "gamma_g": float, "n_sites": int}
_MODEL_CHOICES = {"boundary": ("periodic", "open"), "variant": ("standard", "flipped_gain")}
_TASK_FLAGS = {
    "k_grid": int, "e_ref": _e_ref, "gamma_l_values": _floats, "gamma_g_values": _floats,
    "t_grid": _floats, "t_max": float, "n_times": int, "occupied": _ints,
    "skin_threshold": float, "prefix": str,
}
_TASK_CHOICES = {"matrix": ("post", "eff", "z"), "dynamics_method": ("auto", "exact", "covariance")}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--out-dir", help="directory for result files (overrides the config)")
    p.add_argument("--parallel", type=int, default=None,
                   help="worker processes for phase-diagram scans (default: all cores)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the creation time from SVG metadata")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lindskin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lindskin {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the task described by a JSON config")
    p_run.add_argument("--config", required=True)
    _common(p_run)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task with inline flags")
        p.add_argument("--config", help="optional base config; inline flags override it")
        for key, typ in {**_MODEL_FLAGS}.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=f"model.{key}", type=typ)
        for key, choices in _MODEL_CHOICES.items():
            p.add_argument(f"--{key}", dest=f"model.{key}", choices=choices)
        for key, typ in _TASK_FLAGS.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ)
        for key, choices in _TASK_CHOICES.items():
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, choices=choices)
        _common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config) if args.config else {}
    if args.command != "run":
        if data.get("task", args.command) != args.command:
            raise ConfigError(f"config task {data['task']!r} conflicts with subcommand {args.command!r}")
        data["task"] = args.command
        for key, val in vars(args).items():
            if val is None or key in ("command", "config", "out_dir", "parallel", "no_timestamp"):
                continue
            if key.startswith("model."):
                data.setdefault("model", {})[key[6:]] = val
            else:
                data[key] = val
    if args.out_dir:
        data["out_dir"] = args.out_dir
    return RunConfig.model_validate(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        paths = run(cfg, args.parallel, timestamp=not args.no_timestamp)
    except (ValidationError, ConfigError, ModelError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LindskinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
