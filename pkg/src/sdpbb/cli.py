"""Command-line interface: ``sdpbb solve | dobrushin | trace``.

Exit codes: 0 when every requested solve is certified, 2 when a node budget
ran out first, 1 on any error. Solver tolerances default to the values in
``SDPBB_GAP_TOL``, ``SDPBB_FEAS_TOL`` and ``SDPBB_MAX_ITERS`` when set; the
matching flags override them.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import io
from .bnb import solve_bilinear, write_trace_csv
from .channels import QuantumChannel, dephasing_channel, rotated_dephasing
from .dobrushin import DobrushinInstance, dobrushin_curve, solve_point
from .errors import SdpbbError
from .sdp import SolverSettings

EXIT_OK, EXIT_ERROR, EXIT_NODE_LIMIT = 0, 1, 2

ENV_OVERRIDES = {"gap_tol": ("SDPBB_GAP_TOL", float), "feas_tol": ("SDPBB_FEAS_TOL", float), "max_iters": ("SDPBB_MAX_ITERS", int)}


class _Parser(argparse.ArgumentParser):
    # usage errors share exit code 1 with other errors; 2 means a node budget ran out
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected 'on' or 'off', got {text!r}")
    return text == "on"


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count`` with inclusive endpoints; ``count = 1`` gives ``[start]``."""
    try:
        start, stop, count = text.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:count, got {text!r}") from None
    if count < 1:
        raise argparse.ArgumentTypeError("grid count must be at least 1")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def solver_settings(args) -> SolverSettings:
    kwargs = {}
    for field, (var, cast) in ENV_OVERRIDES.items():
        flag = getattr(args, field, None)
        if flag is not None:
            kwargs[field] = flag
        elif os.environ.get(var):
            try:
                kwargs[field] = cast(os.environ[var])
            except ValueError:
                raise SdpbbError(f"environment variable {var}={os.environ[var]!r} is not a valid {cast.__name__}") from None
    return SolverSettings(**kwargs)


def _channel(args) -> QuantumChannel:
    if args.channel == "dephasing":
        return dephasing_channel(args.a)
    if args.channel == "rotated-dephasing":
        return rotated_dephasing(args.a, args.theta)
    if not args.kraus_file:
        raise SdpbbError("--channel kraus-file needs --kraus-file PATH")
    return QuantumChannel(tuple(io.load_kraus(args.kraus_file)), name=str(args.kraus_file))


def _hamiltonian(args):
    return io.load_hamiltonian(args.hamiltonian_file) if args.hamiltonian_file else None


def _fmt_matrix(m) -> str:
    m = np.asarray(m)
    if np.max(np.abs(m.imag), initial=0) < 1e-12:
        return np.array2string(m.real, precision=6, suppress_small=True)
    return np.array2string(m, precision=6, suppress_small=True)


def cmd_solve(args) -> int:
    problem = io.load_problem(args.path)
    settings = solver_settings(args)
    hint = None
    if args.seesaw_init:
        from .seesaw import seesaw

        try:
            hint = seesaw(problem, settings=settings).values
        except SdpbbError as exc:
            print(f"seesaw start skipped: {exc}", file=sys.stderr)
    res = solve_bilinear(
        problem, args.epsilon, max_nodes=args.max_nodes, incumbent_hint=hint, settings=settings, trace=bool(args.trace)
    )
    print(f"status: {res.status}")
    print(f"interval: [{res.lower:.9g}, {res.value:.9g}]")
    print(f"value: {res.value:.6f} +/- {args.epsilon:g}")
    print(f"nodes: {res.nodes}  partition: {res.partition_size}  seconds: {res.seconds:.3f}")
    for name, val in res.witness.items():
        print(f"{name} =\n{_fmt_matrix(val)}")
    if args.trace:
        write_trace_csv(args.trace, res.trace)
    return EXIT_OK if res.certified else EXIT_NODE_LIMIT


def _instance_kwargs(args) -> dict:
    return dict(
        mode="qubit" if args.qubit_mode else "general",
        symmetry=args.symmetry,
        trace_one_P=args.trace_one_p,
    )


def cmd_dobrushin(args) -> int:
    channel, H = _channel(args), _hamiltonian(args)
    settings = solver_settings(args)
    t0 = time.perf_counter()
    points = dobrushin_curve(
        channel, H, args.energy, args.delta_grid, args.epsilon,
        seesaw_init=args.seesaw_init, max_nodes=args.max_nodes, settings=settings, jobs=args.jobs,
        **_instance_kwargs(args),
    )
    io.write_curve_csv(args.out, points)
    for p in points:
        if p.status != "certified":
            print(f"delta={p.delta:.9g}: {p.status} {p.error}".rstrip(), file=sys.stderr)
    widths = [p.half_width for p in points if np.isfinite(p.half_width)]
    print(f"points: {len(points)}  max half-width: {max(widths, default=float('nan')):.3g}  "
          f"total nodes: {sum(p.nodes for p in points)}  total seconds: {time.perf_counter() - t0:.1f}")
    if any(p.status == "error" for p in points):
        return EXIT_ERROR
    return EXIT_OK if all(p.status == "certified" for p in points) else EXIT_NODE_LIMIT


def cmd_trace(args) -> int:
    channel, H = _channel(args), _hamiltonian(args)
    inst = DobrushinInstance(channel, args.energy, args.delta, H, **_instance_kwargs(args))
    point, res = solve_point(
        inst, args.epsilon, seesaw_init=args.seesaw_init, max_nodes=args.max_nodes,
        settings=solver_settings(args), trace=True,
    )
    write_trace_csv(args.out, res.trace if res is not None else [])
    if res is not None:
        print(f"status: {res.status}  lower: {res.lower:.9g}  upper: {res.value:.9g}  gap: {res.gap:.3g}")
        print(f"iterations: {res.iterations}  nodes: {res.nodes}  final partition: {res.partition_size}")
    print(f"F(delta={point.delta:g}) = {point.value:.9g} +/- {point.half_width:.3g}")
    return EXIT_OK if point.status == "certified" else EXIT_NODE_LIMIT


def _solver_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("solver tolerances")
    g.add_argument("--gap-tol", dest="gap_tol", type=float, help="SDP relative gap tolerance (env SDPBB_GAP_TOL)")
    g.add_argument("--feas-tol", dest="feas_tol", type=float, help="SDP feasibility tolerance (env SDPBB_FEAS_TOL)")
    g.add_argument("--max-iters", dest="max_iters", type=int, help="SDP iteration cap (env SDPBB_MAX_ITERS)")
    p.add_argument("--max-nodes", type=int, default=100_000)
    p.add_argument("--seesaw-init", type=on_off, default=True, metavar="on|off")


def _channel_flags(p: argparse.ArgumentParser):
    p.add_argument("--channel", choices=("dephasing", "rotated-dephasing", "kraus-file"), default="dephasing")
    p.add_argument("--a", type=float, default=0.5, help="dephasing parameter")
    p.add_argument("--theta", type=float, default=0.0, help="axis rotation for rotated-dephasing")
    p.add_argument("--kraus-file", help="JSON list of [re, im] Kraus operators")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--hamiltonian-file", help="JSON [re, im] Hermitian matrix; default sigma_3")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--qubit-mode", type=on_off, default=True, metavar="on|off")
    p.add_argument("--symmetry", type=on_off, default=False, metavar="on|off")
    p.add_argument("--trace-one-p", type=on_off, default=False, metavar="on|off")
    p.add_argument("--out", required=True, help="CSV output path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdpbb", description="Certified global optimization of semidefinite bilinear programs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a JSON problem file")
    p.add_argument("path")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--trace", help="write the convergence trace CSV here")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("dobrushin", help="sweep an energy-constrained Dobrushin curve")
    _channel_flags(p)
    p.add_argument("--delta-grid", type=parse_grid, default=parse_grid("0:2:21"), metavar="START:STOP:COUNT")
    p.add_argument("--jobs", type=int, default=1, help="curve points solved in parallel")
    _solver_flags(p)
    p.set_defaults(func=cmd_dobrushin)

    p = sub.add_parser("trace", help="convergence trace of a single curve point")
    _channel_flags(p)
    p.add_argument("--delta", type=float, default=2.0)
    _solver_flags(p)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SdpbbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
