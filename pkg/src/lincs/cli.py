"""Command line interface: ``lincs <subcommand> [--config PATH] [--out DIR] [--seed N]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from lincs import io
from lincs.algebra import TOL
from lincs.config import default_config, parse_config
from lincs.control_sets import circle_control_sets
from lincs.cylinder import project
from lincs.exceptions import ConfigError, RejectedInputError
from lincs.jordan import check_conditions, eigenspace_split, jordan_decompose
from lincs.system import PiecewiseControl, reachable_cloud, solve_constant
from lincs.verify import fit_estimator, run_verify


def _matrix_arg(text):
    values = [float(v) for v in text.replace(";", ",").split(",")]
    n = int(round(np.sqrt(len(values))))
    if n * n != len(values):
        raise argparse.ArgumentTypeError("matrix needs n*n comma-separated row-major entries")
    return np.array(values).reshape(n, n)


def _load(args):
    cfg = parse_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    TOL.update(vars(cfg.tolerances))
    return cfg


def _out(cfg, name):
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path / name


def cmd_decompose(args, cfg):
    X = args.matrix if args.matrix is not None else cfg.X_drift
    parts = jordan_decompose(X)
    residuals = parts.residuals(X)
    named = [("X", X), ("E", parts.elliptic), ("H", parts.hyperbolic), ("N", parts.nilpotent)]
    split = eigenspace_split(parts.hyperbolic)
    for space, basis, tags in (("n_H", split.positive, split.positive_tags),
                               ("z_H", split.zero, split.zero_tags),
                               ("n_H-", split.negative, split.negative_tags)):
        for k, (B, tag) in enumerate(zip(basis, tags)):
            named.append((f"{space}[{k}] alpha={tag:.6g}", B))
    named += [(f"residual {key}", value) for key, value in residuals.items()]
    text = io.matrices_csv(named)
    io.write_text(_out(cfg, "decompose.csv"), text)
    for name, value in named:
        value = np.asarray(value)
        if value.ndim == 2:
            print(f"{name}:\n{np.array2string(value, precision=6, suppress_small=True)}")
        else:
            print(f"{name}: {float(value):.3g}")
    return 0


def cmd_check_conditions(args, cfg):
    report = check_conditions(cfg.H, cfg.Y[0], cfg.rho)
    print(f"condition 1 (H nonzero diagonal): {report.h_nonzero_diagonal}")
    print(f"condition 2 (max det(H+uX) < 0): {report.hyperbolic_for_all_u} "
          f"(max det = {report.max_det:.17g})")
    print(f"condition 3 (ad-rank 3): {report.spans} (rank = {report.adrank})")
    return 0 if report.ok else 1


def _trajectory(sys, g0, u, dt):
    times = [0.0]
    states = [np.array(g0)]
    t = 0.0
    g = np.array(g0)
    for tau, c in u.segments:
        n = max(1, int(np.ceil(tau / dt)))
        start = g
        for k in range(1, n + 1):
            states.append(solve_constant(sys, tau * k / n, start, c))
            times.append(t + tau * k / n)
        g = states[-1]
        t += tau
    return times, states


def cmd_simulate(args, cfg):
    sys_ = cfg.system()
    u = PiecewiseControl.from_string(args.control)
    g0 = args.g0 if args.g0 is not None else np.eye(sys_.n)
    times, states = _trajectory(sys_, g0, u, args.dt)
    io.write_text(_out(cfg, "trajectory.csv"), io.trajectory_csv(times, states))
    print(f"final state after t = {u.duration:g}:\n{states[-1]}")
    return 0


def cmd_project(args, cfg):
    if args.g is not None:
        p = project(args.g)
        print(f"theta = {p.theta:.17g}, x = {p.x:.17g}")
        io.write_text(_out(cfg, "cylinder.csv"), io.cylinder_csv([p.theta], [p.x]))
        return 0
    sys_ = cfg.system()
    u = PiecewiseControl.from_string(args.control)
    _, states = _trajectory(sys_, np.eye(2), u, args.dt)
    points = [project(g) for g in states]
    io.write_text(_out(cfg, "cylinder.csv"),
                  io.cylinder_csv([p.theta for p in points], [p.x for p in points]))
    print(f"{len(points)} points written")
    return 0


def cmd_reachable(args, cfg):
    cloud = reachable_cloud(cfg.system(), np.eye(cfg.system().n), args.horizon, args.n_points,
                            seed=cfg.seed)
    io.write_text(_out(cfg, "reachable.csv"), io.cloud_csv(cloud))
    print(f"{len(cloud.points)} points, replay residual {cloud.replay_residual(cfg.system()):.3g}")
    return 0


def cmd_circle_sets(args, cfg):
    arcs = circle_control_sets(cfg.system(), n_samples=args.samples)
    io.write_text(_out(cfg, "circle_sets.csv"), io.arcs_csv(arcs))
    for arc in arcs:
        print(f"{arc.label:11s} {arc.kind:9s} [{arc.start:.9f}, {arc.end:.9f}]")
    return 0


def cmd_cylinder_sets(args, cfg):
    est = fit_estimator(cfg)
    io.write_text(_out(cfg, "cell_sets.csv"), io.cellsets_csv(est.control_sets_, est.grid_))
    io.write_text(_out(cfg, "cylinder_sets.svg"), io.render_svg(est.control_sets_, est.grid_))
    for cs in est.control_sets_:
        lo, hi, xlo, xhi = cs.bounds(est.grid_)
        marks = ", ".join(cs.contains)
        print(f"{cs.label:4s} {len(cs):5d} cells  theta [{lo:.4f}, {hi:.4f}]  "
              f"x [{xlo:.4f}, {xhi:.4f}]  {marks}")
    return 0


def cmd_verify(args, cfg):
    only = set(args.only) if args.only else None
    report = run_verify(cfg, only=only, log=print)
    io.write_text(_out(cfg, "verify.csv"), report.to_csv())
    io.write_text(_out(cfg, "verify.txt"), report.to_text())
    for name, text in report.artifacts.items():
        io.write_text(_out(cfg, name), text)
    print(report.to_text().splitlines()[-1])
    return 0 if report.ok else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration (default: shipped example)")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("--seed", type=int, help="random seed (overrides seed)")

    parser = argparse.ArgumentParser(prog="lincs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[common], help="Jordan parts and ad(H) split")
    p.add_argument("--matrix", type=_matrix_arg, help="row-major entries, e.g. 1,1,0.5,-1")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("check-conditions", parents=[common], help="structural conditions")
    p.set_defaults(func=cmd_check_conditions)

    for name, func, help_ in (("simulate", cmd_simulate, "trajectory under a piecewise control"),
                              ("project", cmd_project, "project to the cylinder")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--control", default="1.0:0.1", help="segments tau:c;tau:c;...")
        p.add_argument("--dt", type=float, default=0.01, help="output sampling step")
        if name == "simulate":
            p.add_argument("--g0", type=_matrix_arg, help="initial state, row-major")
        else:
            p.add_argument("--g", type=_matrix_arg, help="project a single group element")
        p.set_defaults(func=func)

    p = sub.add_parser("reachable", parents=[common], help="sample the reachable set from e")
    p.add_argument("--horizon", type=float, default=2.0)
    p.add_argument("--n-points", type=int, default=200)
    p.set_defaults(func=cmd_reachable)

    p = sub.add_parser("circle-sets", parents=[common], help="control sets on the circle")
    p.add_argument("--samples", type=int, default=201)
    p.set_defaults(func=cmd_circle_sets)

    p = sub.add_parser("cylinder-sets", parents=[common], help="cell-mapping control sets")
    p.set_defaults(func=cmd_cylinder_sets)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    p.add_argument("--only", type=int, nargs="*", help="criterion ids to run")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        return args.func(args, cfg)
    except (ConfigError, RejectedInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
