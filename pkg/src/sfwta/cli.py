"""Command line entry point.

Subcommands::

    sfwta solve      --network FILE --method {fw,expected,sfwta} [--beta B] [--seed S]
    sfwta compare    running-mean social cost of both strategies on shared noise
    sfwta trace      stochastic solver convergence trace
    sfwta beta-sweep expected cost of both strategies across spreads

Every command writes CSV files (plus an SVG view of each) to ``--out``,
defaulting to ``./out/<command>-<timestamp>``, and a ``report.json``.
Exit status: 0 success, 1 input error, 2 solver error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import plotting
from .cost_model import CostParams, expected_social_cost_case1, social_cost
from .fw_solver import FwConfig, solve_deterministic, solve_expected
from .network import Network, NetworkError, UnreachableDemandPairError, load_network, example_network
from .sfwta_solver import PowerLaw, StopRule, solve_sfwta, validate_schedule
from .shortest_path import SolverError
from .stochastic_env import NoiseModel, derive_seed, make_generator, sample_uniform_block
from .trace import SolverTrace

COST = "cost units"


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunReport:
    command: str
    config: dict
    flows: dict[str, list[float]] = field(default_factory=dict)
    objectives: dict[str, float] = field(default_factory=dict)
    iterations: int | None = None
    duration_s: float = 0.0
    csv_paths: list[str] = field(default_factory=list)
    plot_paths: list[str] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    notes: dict[str, float] = field(default_factory=dict)


# --- computations shared by the commands --------------------------------------


@dataclass
class CompareResult:
    x_stochastic: np.ndarray
    x_deterministic: np.ndarray
    running_stochastic: np.ndarray
    running_deterministic: np.ndarray

    def stochastic_below_after(self, step: int) -> bool:
        s, d = self.running_stochastic[step:], self.running_deterministic[step:]
        return bool(np.all(s < d))


def running_mean(values: np.ndarray) -> np.ndarray:
    return np.cumsum(values) / np.arange(1, values.size + 1)


def compare_strategies(
    x_stochastic: np.ndarray,
    x_deterministic: np.ndarray,
    params: CostParams,
    beta: float,
    steps: int,
    seed: int,
) -> CompareResult:
    """Running mean of the realised social cost of two flow plans on common noise.

    Step ``t`` draws one uniform vector ``u_t`` and evaluates both plans at
    ``x (1 + beta u_t)``.
    """
    gen = make_generator(seed)
    u = sample_uniform_block(gen, steps, params.a.size)
    scale = 1.0 + beta * u
    cost_s = social_cost(x_stochastic * scale, params)
    cost_d = social_cost(x_deterministic * scale, params)
    return CompareResult(x_stochastic, x_deterministic, running_mean(cost_s), running_mean(cost_d))


@dataclass
class SweepResult:
    betas: np.ndarray
    cost_stochastic: np.ndarray
    cost_deterministic: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.cost_deterministic - self.cost_stochastic

    def checks(self, tol: float = 1e-12) -> dict[str, bool]:
        out = {
            "stochastic_cost_nondecreasing": bool(np.all(np.diff(self.cost_stochastic) >= -tol)),
            "deterministic_cost_nondecreasing": bool(np.all(np.diff(self.cost_deterministic) >= -tol)),
            "stochastic_le_deterministic": bool(np.all(self.gap >= -tol)),
        }
        b = list(np.round(self.betas, 12))
        if 1.0 in b and 0.1 in b:
            out["gap_beta1_exceeds_gap_beta0.1"] = bool(self.gap[b.index(1.0)] > self.gap[b.index(0.1)])
        return out


def beta_sweep(net: Network, params: CostParams, betas, config: FwConfig | None = None) -> SweepResult:
    """For each spread, cost of the noise-aware optimum vs the classic optimum,
    both measured by the expected social cost at that spread."""
    config = config or FwConfig()
    x_det, _ = solve_deterministic(net, params, config)
    cs, cd = [], []
    for beta in betas:
        x_s, _ = solve_expected(net, params, beta, config)
        cs.append(float(expected_social_cost_case1(x_s, beta, params)))
        cd.append(float(expected_social_cost_case1(x_det, beta, params)))
    return SweepResult(np.asarray(betas, dtype=float), np.array(cs), np.array(cd))


# --- output helpers --------------------------------------------------------------


def _num(v) -> str:
    return repr(float(v))


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_flows(out: Path, net: Network, x: np.ndarray, report: RunReport) -> None:
    p = out / "flows.csv"
    write_csv(p, ["edge_id", "tail", "head", "flow [flow units]"],
              ([k, e.tail, e.head, _num(x[k])] for k, e in enumerate(net.edges)))
    svg = out / "flows.svg"
    plotting.bar_chart(svg, [f"{e.tail}-{e.head}" for e in net.edges], x,
                       title="Edge flows", ylabel="flow")
    report.csv_paths.append(str(p))
    report.plot_paths.append(str(svg))


def write_trace(out: Path, trace: SolverTrace, report: RunReport, stochastic: bool) -> None:
    p = out / "trace.csv"
    n = trace.n_iterations
    it = range(1, n + 1)
    if stochastic:
        track = trace.tracking_error if trace.has_tracking else [float("nan")] * n
        write_csv(p, ["iteration", "max_rel_change [1]", f"sampled_cost [{COST}]",
                      "tracking_error [(cost units/flow unit)^2]"],
                  ([i, _num(r), _num(c), _num(e)] for i, r, c, e in
                   zip(it, trace.max_rel_change, trace.sampled_cost, track)))
    else:
        write_csv(p, ["iteration", "max_rel_change [1]", f"objective [{COST}]",
                      f"duality_gap [{COST}]"],
                  ([i, _num(r), _num(o), _num(g)] for i, r, o, g in
                   zip(it, trace.max_rel_change, trace.objective, trace.gap)))
    svg = out / "trace.svg"
    xs = np.arange(1, n + 1)
    series = {"max relative change": (xs, trace.max_rel_change)}
    if stochastic and trace.has_tracking:
        series["tracking error"] = (xs, trace.tracking_error)
    plotting.line_chart(svg, series, title="Convergence trace", xlabel="iteration",
                        ylabel="value", log_y=True)
    report.csv_paths.append(str(p))
    report.plot_paths.append(str(svg))


def _out_dir(args, command: str) -> Path:
    out = Path(args.out) if args.out else Path("out") / f"{command}-{datetime.now():%Y%m%d-%H%M%S}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(report: RunReport, out: Path, start: float) -> RunReport:
    report.duration_s = time.perf_counter() - start
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(report), fh, indent=2)
    return report


def _network(args) -> Network:
    if args.network is None:
        return example_network()
    try:
        return load_network(args.network)
    except OSError as exc:
        raise InputError(f"cannot read network file: {exc}") from None


def _schedule(args) -> PowerLaw:
    d = PowerLaw()
    sched = PowerLaw(
        rho0=d.rho0 if args.rho0 is None else args.rho0,
        p_rho=d.p_rho if args.prho is None else args.prho,
        gamma0=d.gamma0 if args.gamma0 is None else args.gamma0,
        p_gamma=d.p_gamma if args.pgamma is None else args.pgamma,
    )
    check = validate_schedule(sched)
    if not check:
        raise InputError("invalid step schedule: " + "; ".join(check.violations))
    return sched


def _check_beta(beta: float) -> float:
    if not 0.0 <= beta <= 1.0:
        raise InputError(f"--beta must lie in [0, 1], got {beta}")
    return beta


def _fmt_flows(x) -> str:
    return " ".join(f"{v:.4f}" for v in x)


def _run_sfwta(net, params, args, beta: float, seed: int) -> tuple[np.ndarray, SolverTrace]:
    stop = StopRule(
        max_iters=args.iters or 100_000,
        rel_change_tol=args.tol if args.tol is not None else 1e-6,
        patience=args.patience,
    )
    return solve_sfwta(net, params, NoiseModel.multiplicative(beta, seed), _schedule(args), stop,
                       snapshot_every=args.snapshot_every)


# --- commands --------------------------------------------------------------------


def cmd_solve(args) -> RunReport:
    start = time.perf_counter()
    net = _network(args)
    params = CostParams.from_network(net)
    beta = _check_beta(args.beta)
    _schedule(args)
    out = _out_dir(args, "solve")
    report = RunReport("solve", _config(args))
    fw_cfg = FwConfig(max_iters=args.iters or 10_000,
                      rel_change_tol=args.tol if args.tol else 1e-6)
    if args.method == "fw":
        x, trace = solve_deterministic(net, params, fw_cfg)
        report.objectives["social_cost"] = float(social_cost(x, params))
    elif args.method == "expected":
        x, trace = solve_expected(net, params, beta, fw_cfg)
        report.objectives["expected_social_cost"] = float(expected_social_cost_case1(x, beta, params))
    else:
        x, trace = _run_sfwta(net, params, args, beta, args.seed)
        report.objectives["expected_social_cost"] = float(expected_social_cost_case1(x, beta, params))
    report.objectives.setdefault("social_cost", float(social_cost(x, params)))
    report.flows["x"] = [float(v) for v in x]
    report.iterations = trace.n_iterations
    report.notes["converged"] = float(trace.converged)
    write_flows(out, net, x, report)
    write_trace(out, trace, report, stochastic=args.method == "sfwta")

    print(f"flows: {_fmt_flows(x)}")
    for k, v in report.objectives.items():
        print(f"{k}: {v:.6f}")
    print(f"iterations: {trace.n_iterations} ({trace.stop_reason})")
    print(f"output: {out}")
    return _finish(report, out, start)


def cmd_compare(args) -> RunReport:
    start = time.perf_counter()
    net = _network(args)
    params = CostParams.from_network(net)
    beta = _check_beta(args.beta)
    steps = args.steps
    if steps < 1:
        raise InputError("--steps must be >= 1")
    if args.replications < 1:
        raise InputError("--replications must be >= 1")
    out = _out_dir(args, "compare")
    report = RunReport("compare", _config(args))

    x_det, _ = solve_deterministic(net, params)
    if args.stochastic_method == "sfwta":
        x_sto, _ = _run_sfwta(net, params, args, beta, args.seed)
    else:
        x_sto, _ = solve_expected(net, params, beta)

    seeds = [args.seed] if args.replications == 1 else [
        derive_seed(args.seed, r) for r in range(args.replications)]
    results = [compare_strategies(x_sto, x_det, params, beta, steps, s) for s in seeds]
    rs = np.mean([r.running_stochastic for r in results], axis=0)
    rd = np.mean([r.running_deterministic for r in results], axis=0)

    p = out / "compare.csv"
    write_csv(p, ["step", f"running_mean_stochastic [{COST}]", f"running_mean_deterministic [{COST}]"],
              ([t, _num(a), _num(b)] for t, a, b in zip(range(1, steps + 1), rs, rd)))
    report.csv_paths.append(str(p))
    if args.replications > 1:
        p2 = out / "replications.csv"
        write_csv(p2, ["replication", "seed", f"final_mean_stochastic [{COST}]",
                       f"final_mean_deterministic [{COST}]"],
                  ([i, s, _num(r.running_stochastic[-1]), _num(r.running_deterministic[-1])]
                   for i, (s, r) in enumerate(zip(seeds, results))))
        report.csv_paths.append(str(p2))
    svg = out / "compare.svg"
    xs = np.arange(1, steps + 1)
    plotting.line_chart(svg, {"stochastic strategy": (xs, rs), "deterministic strategy": (xs, rd)},
                        title=f"Running mean of social cost, beta={beta:g}", xlabel="step",
                        ylabel="running mean cost")
    report.plot_paths.append(str(svg))

    report.flows = {"stochastic": [float(v) for v in x_sto], "deterministic": [float(v) for v in x_det]}
    report.objectives = {
        "final_running_mean_stochastic": float(rs[-1]),
        "final_running_mean_deterministic": float(rd[-1]),
        "expected_cost_stochastic": float(expected_social_cost_case1(x_sto, beta, params)),
        "expected_cost_deterministic": float(expected_social_cost_case1(x_det, beta, params)),
    }
    report.iterations = steps
    report.checks["stochastic_final_mean_lower"] = bool(rs[-1] < rd[-1])
    print(f"stochastic strategy flows:    {_fmt_flows(x_sto)}")
    print(f"deterministic strategy flows: {_fmt_flows(x_det)}")
    print(f"final running mean: stochastic {rs[-1]:.6f}, deterministic {rd[-1]:.6f}")
    print(f"output: {out}")
    return _finish(report, out, start)


def cmd_trace(args) -> RunReport:
    start = time.perf_counter()
    net = _network(args)
    params = CostParams.from_network(net)
    beta = _check_beta(args.beta)
    out = _out_dir(args, "trace")
    report = RunReport("trace", _config(args))
    x, trace = _run_sfwta(net, params, args, beta, args.seed)
    write_trace(out, trace, report, stochastic=True)
    w = min(args.window, trace.n_iterations)
    rel = np.asarray(trace.max_rel_change)
    first, final = float(rel[:w].mean()), float(rel[-w:].mean())
    report.flows["x"] = [float(v) for v in x]
    report.iterations = trace.n_iterations
    report.notes.update(first_window_mean_rel_change=first, final_window_mean_rel_change=final)
    report.checks["rel_change_trend_decreasing"] = final < first
    if trace.has_tracking:
        err = np.asarray(trace.tracking_error)
        report.notes.update(first_window_mean_tracking_error=float(err[:w].mean()),
                            final_window_mean_tracking_error=float(err[-w:].mean()))
    print(f"flows: {_fmt_flows(x)}")
    print(f"iterations: {trace.n_iterations}")
    print(f"max relative change, window {w}: first {first:.4g}, final {final:.4g}")
    print(f"output: {out}")
    return _finish(report, out, start)


def cmd_beta_sweep(args) -> RunReport:
    start = time.perf_counter()
    net = _network(args)
    params = CostParams.from_network(net)
    try:
        betas = [float(b) for b in args.betas.split(",")] if args.betas else \
            [round(0.1 * i, 10) for i in range(11)]
    except ValueError:
        raise InputError(f"bad --betas list {args.betas!r}") from None
    for b in betas:
        _check_beta(b)
    out = _out_dir(args, "beta-sweep")
    report = RunReport("beta-sweep", _config(args))
    res = beta_sweep(net, params, betas)
    p = out / "sweep.csv"
    write_csv(p, ["beta [1]", f"cost_stoch [{COST}]", f"cost_det [{COST}]"],
              ([_num(b), _num(s), _num(d)] for b, s, d in
               zip(res.betas, res.cost_stochastic, res.cost_deterministic)))
    svg = out / "sweep.svg"
    plotting.line_chart(svg, {"stochastic strategy": (res.betas, res.cost_stochastic),
                              "deterministic strategy": (res.betas, res.cost_deterministic)},
                        title="Expected cost vs spread", xlabel="beta", ylabel="expected cost")
    report.csv_paths.append(str(p))
    report.plot_paths.append(str(svg))
    report.checks.update(res.checks())
    report.notes.update({f"gap_beta_{b:g}": float(g) for b, g in zip(res.betas, res.gap)})
    report.iterations = len(betas)
    for b, s, d in zip(res.betas, res.cost_stochastic, res.cost_deterministic):
        print(f"beta={b:.2f}  stochastic {s:.6f}  deterministic {d:.6f}  gap {d - s:.6f}")
    print(f"output: {out}")
    return _finish(report, out, start)


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sfwta", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", help="network file (default: bundled 4-node example)")
    common.add_argument("--beta", type=float, default=1.0, help="noise spread in [0, 1]")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--out", help="output directory")

    sched = argparse.ArgumentParser(add_help=False)
    sched.add_argument("--iters", type=int, help="iteration budget")
    sched.add_argument("--rho0", type=float)
    sched.add_argument("--prho", type=float)
    sched.add_argument("--gamma0", type=float)
    sched.add_argument("--pgamma", type=float)
    sched.add_argument("--tol", type=float, help="relative-change stopping threshold")
    sched.add_argument("--patience", type=int, default=50)
    sched.add_argument("--snapshot-every", type=int, default=100)

    p = sub.add_parser("solve", parents=[common, sched], help="solve one assignment problem")
    p.add_argument("--method", choices=("fw", "expected", "sfwta"), default="fw")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", parents=[common, sched],
                       help="running-mean cost of stochastic vs deterministic strategy")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--stochastic-method", choices=("expected", "sfwta"), default="expected")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trace", parents=[common, sched], help="stochastic solver convergence trace")
    p.add_argument("--window", type=int, default=100)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("beta-sweep", parents=[common], help="expected cost across spreads")
    p.add_argument("--betas", help="comma-separated spreads (default 0,0.1,...,1)")
    p.set_defaults(func=cmd_beta_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SolverError, UnreachableDemandPairError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    except (NetworkError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
