"""Command line front end.

Subcommands wire drivers, systems, solvers, certificates, and the gallery
into reproducible file-based runs.  Every run writes a ``config.json`` echo
of its fully resolved options; ``--config config.json`` replays the run
bit-identically.  Exit codes: 0 success (certify: pass), 1 error, 2
simulate ended in blow-up, 3 certify fail, 4 certify inconclusive.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import gallery
from .certificates import GrowthSpec, base_radius, crossing_audit, estimate_K
from .fields import load_polynomial_system
from .noise import DriverSpec
from .paths import SampledPath, holder_exponent_estimate, holder_norm, p_variation
from .rough import chen_defect, ito_lift, pure_quadratic_lift
from .solvers import (BLOWN_UP, COMPLETED, StepControl, flow_grid, ode_solve,
                      rde_solve, young_solve)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2
EXIT_FAIL = 3
EXIT_INCONCLUSIVE = 4

_VERDICT_EXIT = {"pass": EXIT_OK, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main controls the code."""

    def error(self, message):
        raise CliError(message)


def _parse_floats(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise CliError(f"expected comma-separated floats, got {text!r}")


def _resolve_system(name):
    """Gallery id or path to a polynomial spec file."""
    if name is None:
        raise CliError("--system is required (flag or config field)")
    if name in gallery.available():
        entry = gallery.registry(name)
        return entry.system, entry
    if os.path.exists(name):
        return load_polynomial_system(name), None
    raise CliError(f"unknown system {name!r}: not a gallery id "
                   f"({', '.join(gallery.available())}) and not a file")


def _zero_path(T, mesh, dim):
    n = max(1, int(round(T / mesh)))
    times = np.linspace(0.0, T, n + 1)
    return SampledPath(times, np.zeros((n + 1, dim)))


def _resolve_driver(args, sys_, entry):
    """Returns ("rough", RoughPath) or ("path", SampledPath)."""
    kind = args.driver
    if kind is None:
        default = entry.driver if entry is not None else None
        if isinstance(default, DriverSpec):
            kind = default.kind
        elif isinstance(default, str):
            kind = default
        else:
            kind = "zero"
    T = args.T if args.T is not None else _default_T(entry, kind)
    mesh = _mesh_of(args)
    if kind == "pure-quadratic":
        m = sys_.driver_dim
        return "rough", pure_quadratic_lift(T, mesh, m=m, alpha=args.alpha)
    if kind == "zero":
        dim = sys_.driver_dim if sys_.sigma is not None else sys_.dim
        return "path", _zero_path(T, mesh, dim)
    if kind in ("brownian", "fbm", "levy"):
        dim = sys_.driver_dim if sys_.sigma is not None else sys_.dim
        params = {}
        if kind == "fbm":
            params["H"] = args.H
        spec = DriverSpec(kind, dim=dim, T=T, mesh=mesh, seed=args.seed,
                          params=params)
        return "path", spec.generate()
    raise CliError(f"unknown driver kind {kind!r}; expected one of "
                   "brownian, fbm, levy, pure-quadratic, zero")


def _default_T(entry, kind):
    if entry is not None and isinstance(entry.driver, DriverSpec):
        return entry.driver.T
    if kind == "pure-quadratic":
        return 2.0
    return 3.0 if kind == "zero" else 1.0


def _mesh_of(args):
    if args.mesh is not None:
        return args.mesh
    return 2.0 ** (-args.level)


def _resolve_x0(args, sys_, entry):
    if args.x0 is not None:
        x0 = _parse_floats(args.x0)
        if len(x0) != sys_.dim:
            raise CliError(f"x0 has {len(x0)} components, system dim is {sys_.dim}")
        return np.array(x0)
    if entry is not None:
        return np.array(entry.default_x0)
    return np.ones(sys_.dim)


def _ctrl_of(args):
    return StepControl(threshold=args.threshold, step_floor=args.step_floor,
                       cap_rel=args.cap_rel)


def _run_solver(args, sys_, entry):
    mode, driver = _resolve_driver(args, sys_, entry)
    x0 = _resolve_x0(args, sys_, entry)
    ctrl = _ctrl_of(args)
    if mode == "rough":
        return rde_solve(sys_, driver, x0, ctrl=ctrl)
    if sys_.sigma is None:
        return ode_solve(sys_, driver, x0, ctrl=ctrl)
    return young_solve(sys_, driver, x0, ctrl=ctrl)


def _echo_config(args, out_dir):
    skip = {"config", "func", "out"}
    cfg = {"command": args.command, "out": args.out}
    for key, val in sorted(vars(args).items()):
        if key not in skip and key != "command":
            cfg[key] = val
    path = os.path.join(out_dir, "config.json")
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    return path


def _apply_config(args):
    if args.config is None:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as e:
        raise CliError(f"malformed config {args.config}: line {e.lineno}, "
                       f"column {e.colno}: {e.msg}")
    except OSError as e:
        raise CliError(f"cannot read config {args.config}: {e}")
    if not isinstance(cfg, dict):
        raise CliError(f"config {args.config} must be a JSON object")
    command = cfg.pop("command", args.command)
    if command != args.command:
        raise CliError(f"config is for command {command!r}, invoked {args.command!r}")
    for key, val in cfg.items():
        if not hasattr(args, key) or key in ("config", "func"):
            raise CliError(f"unknown config field {key!r}")
        if key == "out":
            continue  # output dir always comes from the invocation
        setattr(args, key, val)
    return args


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write_json(out_dir, name, payload):
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    return path


def _status_payload(traj):
    norms = traj.path.norms()
    return {
        "status": traj.status,
        "blowup_time": traj.blowup_time,
        "T": float(traj.path.times[-1]),
        "n_samples": int(traj.path.n),
        "sup_norm": float(np.max(norms)),
        "final_norm": float(norms[-1]),
    }


def _cmd_simulate(args):
    out = _out_dir(args)
    sys_, entry = _resolve_system(args.system)
    traj = _run_solver(args, sys_, entry)
    traj.path.to_csv(os.path.join(out, "trajectory.csv"))
    _write_json(out, "status.json", _status_payload(traj))
    _echo_config(args, out)
    if traj.status == COMPLETED:
        return EXIT_OK
    if traj.status == BLOWN_UP:
        return EXIT_BLOWUP
    print(f"run stopped: {traj.status}", file=sys.stderr)
    return EXIT_ERROR


def _growth_of(args):
    return GrowthSpec.from_preset(args.f, args.beta, a=args.a, b_a_T=args.b_a_T)


def _cmd_certify(args):
    out = _out_dir(args)
    sys_, entry = _resolve_system(args.system)
    spec = _growth_of(args)
    if args.gamma_csv is not None:
        gamma = SampledPath.from_csv(args.gamma_csv)
        x0 = _resolve_x0(args, sys_, entry)
        ctrl = _ctrl_of(args)
        if sys_.sigma is None:
            traj = ode_solve(sys_, gamma, x0, T=args.T, ctrl=ctrl)
        else:
            traj = young_solve(sys_, gamma, x0, T=args.T, ctrl=ctrl)
    else:
        traj = _run_solver(args, sys_, entry)
    eta = traj.eta if traj.eta is not None else None
    if eta is None:
        raise CliError("solver recorded no effective driver; cannot audit")
    R = args.R
    if R is None:
        K_est = args.K if args.K is not None else estimate_K(eta, spec.beta)
        R = base_radius(max(K_est, 1e-12), spec.b_a_T) + 1.0
    report = crossing_audit(traj, eta, spec, R, K=args.K, k_max=args.k_max)
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json())
    _write_json(out, "status.json", _status_payload(traj))
    _echo_config(args, out)
    print(f"certify: {report.overall} (R = {report.R:.6g}, K = {report.K:.6g})")
    return _VERDICT_EXIT[report.overall]


def _cmd_reproduce(args):
    out = _out_dir(args)
    if args.id is None:
        raise CliError("gallery id is required (positional or config field)")
    if args.id not in gallery.available():
        raise CliError(f"unknown gallery id {args.id!r}; available: "
                       f"{', '.join(gallery.available())}")
    entry = gallery.registry(args.id)
    sys_ = entry.system
    traj = _run_solver(args, sys_, entry)
    traj.path.to_csv(os.path.join(out, "trajectory.csv"))

    norms = traj.path.norms()
    plot = np.column_stack([traj.path.times, norms,
                            np.log10(np.maximum(norms, 1e-300))])
    with open(os.path.join(out, "plot.csv"), "w") as fh:
        np.savetxt(fh, plot, delimiter=", ", header="t, norm, log10_norm",
                   comments="")

    payload = _status_payload(traj)
    payload["id"] = args.id
    payload["notes"] = entry.notes
    if entry.blowup_oracle is not None:
        x0 = _resolve_x0(args, sys_, entry)
        try:
            oracle_time = entry.blowup_oracle(x0)
        except ValueError:
            oracle_time = None
        payload["oracle_blowup_time"] = (None if oracle_time is None
                                         or math.isinf(oracle_time)
                                         else oracle_time)
        if (oracle_time is not None and math.isfinite(oracle_time)
                and traj.blowup_time is not None):
            payload["blowup_rel_error"] = abs(traj.blowup_time - oracle_time) / oracle_time
    _write_json(out, "report.json", payload)
    _echo_config(args, out)
    return EXIT_OK


def _cmd_lift(args):
    out = _out_dir(args)
    if args.input is not None:
        w = SampledPath.from_csv(args.input)
    else:
        spec = DriverSpec("brownian", dim=args.dim, T=args.T or 1.0,
                          mesh=_mesh_of(args), seed=args.seed)
        w = spec.generate()
    rp = ito_lift(w, refine=args.refine, alpha=args.alpha)
    m = rp.dim
    header = "i, t_lo, t_hi, " + ", ".join(
        f"xx{j+1}{k+1}" for j in range(m) for k in range(m))
    rows = np.column_stack([
        np.arange(rp.n - 1, dtype=float),
        rp.times[:-1], rp.times[1:],
        rp.cells.reshape(rp.n - 1, m * m),
    ])
    with open(os.path.join(out, "lift.csv"), "w") as fh:
        np.savetxt(fh, rows, delimiter=", ", header=header, comments="")
    _write_json(out, "summary.json", {
        "n": int(rp.n), "dim": int(m), "alpha": float(rp.alpha),
        "chen_defect": float(chen_defect(rp)),
    })
    _echo_config(args, out)
    return EXIT_OK


def _cmd_estimate(args):
    out = _out_dir(args)
    if args.input is None:
        raise CliError("--input is required (flag or config field)")
    path = SampledPath.from_csv(args.input)
    est, table = holder_exponent_estimate(path)
    _write_json(out, "estimates.json", {
        "n": int(path.n), "dim": int(path.dim),
        "alpha": args.alpha, "holder_norm": float(holder_norm(path, args.alpha)),
        "p": args.p, "p_variation": float(p_variation(path, args.p)),
        "holder_exponent": float(est),
    })
    _echo_config(args, out)
    print(f"holder exponent estimate: {est:.4f}")
    return EXIT_OK


def _cmd_sweep(args):
    out = _out_dir(args)
    sys_, entry = _resolve_system(args.system)
    if sys_.dim > 2 and args.grid_n > 1:
        raise CliError("grid sweeps support dim <= 2; pass --grid-n 1")
    axes = [np.linspace(args.grid_lo, args.grid_hi, args.grid_n)] * sys_.dim
    mesh = np.meshgrid(*axes, indexing="ij") if sys_.dim > 1 else [axes[0]]
    x0s = np.column_stack([m.ravel() for m in mesh])
    seeds = [int(s) for s in _parse_floats(args.seeds)]
    T = args.T if args.T is not None else _default_T(entry, "brownian")
    ctrl = _ctrl_of(args)
    rows = []
    for seed in seeds:
        dim = sys_.driver_dim if sys_.sigma is not None else sys_.dim
        spec = DriverSpec("brownian", dim=dim, T=T, mesh=_mesh_of(args), seed=seed)
        driver = spec.generate()
        summaries, _ = flow_grid(sys_, driver, x0s, ctrl=ctrl,
                                 max_workers=args.max_workers)
        for s in summaries:
            rows.append((seed, s.x0, s.status, s.blowup_time, s.endpoint, s.sup_norm))
    d = sys_.dim
    header = ("seed, " + ", ".join(f"x0_{i+1}" for i in range(d)) + ", status, "
              "blowup_time, " + ", ".join(f"end_{i+1}" for i in range(d))
              + ", sup_norm")
    lines = [header]
    for seed, x0, status, bt, end, sup in rows:
        lines.append(", ".join(
            [str(seed)] + [f"{v:.17g}" for v in x0] + [status]
            + [("" if bt is None else f"{bt:.17g}")]
            + [f"{v:.17g}" for v in end] + [f"{sup:.17g}"]))
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    n_blown = sum(1 for r in rows if r[2] == BLOWN_UP)
    _write_json(out, "summary.json", {
        "n_runs": len(rows), "n_blown_up": n_blown,
        "seeds": seeds, "n_starts": int(x0s.shape[0]),
    })
    _echo_config(args, out)
    return EXIT_OK


def _add_common(p, driver=True):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", default=None,
                   help="JSON config echo to replay (overrides other flags)")
    p.add_argument("--T", type=float, default=None, help="time horizon")
    p.add_argument("--mesh", type=float, default=None, help="grid mesh")
    p.add_argument("--level", type=int, default=12,
                   help="dyadic level when --mesh is absent (mesh = 2^-level)")
    p.add_argument("--seed", type=int, default=0)
    if driver:
        p.add_argument("--driver", default=None,
                       help="brownian | fbm | levy | pure-quadratic | zero "
                            "(default: the system's natural driver)")
        p.add_argument("--H", type=float, default=0.5, help="fbm Hurst index")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="declared Holder regularity for rough drivers")
    p.add_argument("--threshold", type=float, default=1e8,
                   help="blow-up declaration radius")
    p.add_argument("--step-floor", type=float, default=1e-12)
    p.add_argument("--cap-rel", type=float, default=0.01)


def build_parser():
    parser = _Parser(prog="roughflow",
                     description="Simulate, lift, estimate, and certify "
                                 "driven dynamical systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory")
    p.add_argument("--system", default=None, help="gallery id or polynomial spec file")
    p.add_argument("--x0", default=None, help="comma-separated start state")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("certify", help="growth certificate + crossing audit")
    p.add_argument("--system", default=None)
    p.add_argument("--x0", default=None)
    p.add_argument("--gamma-csv", default=None,
                   help="drive with this sampled path instead of a generated driver")
    p.add_argument("--f", default="affine", help="growth control preset "
                   "(affine | loglinear | linear)")
    p.add_argument("--beta", type=float, default=1.4)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b-a-T", dest="b_a_T", type=float, default=0.0)
    p.add_argument("--R", type=float, default=None,
                   help="ladder base radius (default: derived from the base radius)")
    p.add_argument("--K", type=float, default=None,
                   help="driver Holder constant (default: estimated)")
    p.add_argument("--k-max", type=int, default=256)
    _add_common(p)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("reproduce", help="run a gallery entry end to end")
    p.add_argument("id", nargs="?", default=None, help="gallery id")
    p.add_argument("--x0", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("lift", help="second-level lift of a sampled path")
    p.add_argument("--input", default=None, help="driver CSV (t, x1..xd)")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--refine", type=int, default=16)
    _add_common(p, driver=False)
    p.set_defaults(func=_cmd_lift)

    p = sub.add_parser("estimate", help="norm and exponent estimates of a path")
    p.add_argument("--input", default=None, help="path CSV (t, x1..xd)")
    p.add_argument("--p", type=float, default=2.0)
    _add_common(p, driver=False)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("sweep", help="flow from a grid of starts across seeds")
    p.add_argument("--system", default=None)
    p.add_argument("--grid-lo", type=float, default=-1.0)
    p.add_argument("--grid-hi", type=float, default=1.0)
    p.add_argument("--grid-n", type=int, default=5)
    p.add_argument("--seeds", default="0", help="comma-separated seed list")
    p.add_argument("--max-workers", type=int, default=4)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args)
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, KeyError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
