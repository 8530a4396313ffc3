"""Command-line interface.

Subcommands::

    exact          exact success probability of the entangled protocol
    classical-opt  best deterministic classical code
    simulate       Monte Carlo trials -> counts CSV + manifest
    sweep          Werner-state sweep -> CSV of (p, exact, simulated)
    seesaw         multi-start seesaw optimization
    truth-table    sampled channel truth table and its inquisition
    tomo           simulate | reconstruct | bootstrap

Commands that write files accept ``--out DIR``; ``--figures`` also renders
PNG figures next to the data files.  ``--json`` prints a machine-readable
summary instead of the human table.  Domain errors exit with status 2.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from eacode import __version__
from eacode import channel as chan
from eacode import classical_code, montecarlo, optimizer, protocol, states, tomography
from eacode.errors import ConvergenceError, DomainError, ResourceError

SEED_ENV = "EACODE_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


class _Inputs:
    """Tracks files read by a command so the manifest can hash them."""

    def __init__(self):
        self.files: dict[str, str] = {}

    def read(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise DomainError(f"no such file: {path}")
        self.files[str(p)] = hashlib.sha256(p.read_bytes()).hexdigest()
        return p


def parse_state(spec: str, inputs: _Inputs) -> states.DensityMatrix:
    if spec in ("phi-plus", "phi_plus"):
        return states.phi_plus()
    if spec in ("mixed", "maximally-mixed"):
        return states.maximally_mixed()
    if spec.startswith("werner:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad Werner parameter in {spec!r}") from None
        return states.werner(p)
    return states.load_state(inputs.read(spec))


def parse_strategy(spec: str, inputs: _Inputs) -> protocol.MeasurementStrategy:
    if spec == "chsh":
        return protocol.chsh_strategy()
    return protocol.load_strategy(inputs.read(spec))


def parse_channel(spec: str, inputs: _Inputs) -> chan.FiniteChannel:
    if spec == "butterfly":
        return chan.butterfly_channel()
    if spec.startswith("identity:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad identity channel size in {spec!r}") from None
        if n < 1:
            raise DomainError("identity channel needs at least one symbol")
        return chan.identity_channel(n)
    return chan.load_channel(inputs.read(spec))


def parse_box(spec: str, inputs: _Inputs) -> protocol.NonSignalingBox:
    if spec == "pr":
        return protocol.pr_box()
    if spec == "uniform":
        return protocol.uniform_box()
    return protocol.load_box(inputs.read(spec))


def parse_range(spec: str) -> np.ndarray:
    """``p0:p1:steps`` -> ``steps`` evenly spaced values."""
    try:
        p0, p1, steps = spec.split(":")
        p0, p1, steps = float(p0), float(p1), int(steps)
    except ValueError:
        raise DomainError(f"range must look like p0:p1:steps, got {spec!r}") from None
    if steps < 1:
        raise DomainError("range needs at least one step")
    return np.linspace(p0, p1, steps)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _emit(args, summary: dict, lines: list[str]) -> None:
    if args.json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def _write_manifest(out: Path, args, argv, seed, inputs: _Inputs, started: float,
                    outputs: list[Path], extra: dict | None = None) -> Path:
    manifest = {
        "command": args.command if not getattr(args, "tomo_command", None)
        else f"tomo {args.tomo_command}",
        "argv": list(argv),
        "version": __version__,
        "seed": seed,
        "inputs": inputs.files,
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_clock_s": round(time.time() - started, 6),
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------

def cmd_exact(args, argv) -> int:
    inputs = _Inputs()
    ch = parse_channel(args.channel, inputs)
    strat = parse_strategy(args.strategy, inputs)
    if args.box:
        box = parse_box(args.box, inputs)
        value = protocol.box_success(box, ch, strat.bob_choice)
        omega = None
    else:
        rho = parse_state(args.state, inputs)
        value = protocol.exact_success(rho, strat, ch)
        omega = protocol.correlation_omega(rho, strat).per_setting
    summary = {"success": value}
    lines = [f"success probability: {_fmt(value)}"]
    if omega is not None:
        summary["omega"] = omega.tolist()
        lines.append("omega(q,v): " + " ".join(
            f"({q},{v})={_fmt(omega[q, v])}" for q in (0, 1) for v in (0, 1)))
    _emit(args, summary, lines)
    return 0


def cmd_classical_opt(args, argv) -> int:
    inputs = _Inputs()
    ch = parse_channel(args.channel, inputs)
    code, value = classical_code.best_deterministic_code(ch, args.messages)
    exact = str(value) if not isinstance(value, float) else None
    summary = {
        "success": float(value),
        "success_exact": exact,
        "code": code.to_json_obj(),
    }
    enc = ", ".join(f"{q}->{ch.input_labels[x]}" for q, x in enumerate(code.encoding))
    dec = ", ".join(f"{ch.output_labels[y]}->{m}" for y, m in enumerate(code.decoding))
    lines = [
        f"best success probability: {_fmt(float(value))}" + (f" ({exact})" if exact else ""),
        f"encoding: {enc}",
        f"decoding: {dec}",
    ]
    if args.out:
        out = _out_dir(args)
        classical_code.save_code(code, out / "code.json")
    _emit(args, summary, lines)
    return 0


def cmd_simulate(args, argv) -> int:
    started = time.time()
    inputs = _Inputs()
    seed = args.seed if args.seed is not None else _default_seed()
    ch = parse_channel(args.channel, inputs)
    strat = parse_strategy(args.strategy, inputs)
    if args.box:
        source = parse_box(args.box, inputs)
        exact = protocol.box_success(source, ch, strat.bob_choice)
    else:
        source = parse_state(args.state, inputs)
        exact = protocol.exact_success(source, strat, ch)
    counts = montecarlo.run_trials(source, strat, ch, args.n, seed, args.backend, args.workers)
    p_hat, sigma = montecarlo.estimate_success(counts)

    out = _out_dir(args)
    outputs = [out / "counts.csv"]
    outputs[0].write_text(counts.to_csv())
    if args.figures:
        from eacode import plotting

        outputs.append(plotting.plot_counts(counts.counts, out / "counts.png",
                                            title=f"n = {args.n}, success {p_hat:.4f}"))
    meta = montecarlo.run_metadata(seed, args.n, args.backend, strat)
    _write_manifest(out, args, argv, seed, inputs, started, outputs,
                    {"run": meta, "exact": exact, "success": p_hat, "sigma": sigma})
    summary = {"success": p_hat, "sigma": sigma, "exact": exact,
               "counts": counts.counts.tolist(), "seed": seed, "n": args.n,
               "backend": args.backend}
    lines = [
        f"trials: {counts.total}  successes: {counts.successes}",
        f"success: {_fmt(p_hat)} +/- {_fmt(sigma)}  (exact {_fmt(exact)}, "
        f"{(p_hat - exact) / sigma if sigma > 0 else 0.0:+.2f} sigma)",
        "counts q/q_hat: " + " ".join(f"{q}/{qh}={counts.counts[q, qh]}"
                                      for q in (0, 1) for qh in (0, 1)),
    ]
    _emit(args, summary, lines)
    return 0


def cmd_sweep(args, argv) -> int:
    started = time.time()
    inputs = _Inputs()
    seed = args.seed if args.seed is not None else _default_seed()
    ch = parse_channel(args.channel, inputs)
    strat = parse_strategy(args.strategy, inputs)
    grid = parse_range(args.werner)
    children = np.random.SeedSequence(seed).spawn(len(grid))
    rows = []
    for p, child in zip(grid, children):
        rho = states.werner(p)
        exact = protocol.exact_success(rho, strat, ch)
        if args.n > 0:
            counts = montecarlo.run_trials(rho, strat, ch, args.n, child, args.backend,
                                           args.workers)
            sim, sigma = montecarlo.estimate_success(counts)
        else:
            sim, sigma = math.nan, math.nan
        rows.append((float(p), exact, sim, sigma))

    out = _out_dir(args)
    csv_path = out / "sweep.csv"
    lines_csv = ["p,exact,simulated,sigma,classical_optimum"]
    for p, exact, sim, sigma in rows:
        lines_csv.append(f"{p:.6f},{exact:.12f},{sim:.12f},{sigma:.12f},{5 / 6:.12f}")
    csv_path.write_text("\n".join(lines_csv) + "\n")
    outputs = [csv_path]
    if args.figures:
        from eacode import plotting

        arr = np.array(rows)
        outputs.append(plotting.plot_sweep(arr[:, 0], arr[:, 1],
                                           arr[:, 2] if args.n > 0 else None,
                                           arr[:, 3] if args.n > 0 else None,
                                           out / "sweep.png"))
    _write_manifest(out, args, argv, seed, inputs, started, outputs)
    summary = {"rows": [{"p": p, "exact": e, "simulated": None if math.isnan(s) else s,
                         "sigma": None if math.isnan(sg) else sg} for p, e, s, sg in rows]}
    lines = [f"{'p':>8} {'exact':>10} {'simulated':>10} {'sigma':>10}"]
    for p, exact, sim, sigma in rows:
        lines.append(f"{p:8.4f} {_fmt(exact):>10} {_fmt(sim):>10} {_fmt(sigma):>10}")
    _emit(args, summary, lines)
    return 0


def cmd_seesaw(args, argv) -> int:
    started = time.time()
    inputs = _Inputs()
    seed = args.seed if args.seed is not None else _default_seed()
    ch = parse_channel(args.channel, inputs)
    rho = parse_state(args.state, inputs)
    seeds = range(seed, seed + args.seeds)
    results = optimizer.multistart(rho, ch, seeds, args.max_iters, args.tol, args.workers)
    finals = np.array([r.final_objective for r in results])
    best = results[int(np.argmax(finals))]

    out = _out_dir(args)
    path = out / "seesaw.json"
    path.write_text(json.dumps({
        "best": best.to_json_obj(),
        "runs": [dict(seed=s, **r.to_json_obj()) for s, r in zip(seeds, results)],
    }, indent=2) + "\n")
    outputs = [path]
    if args.figures:
        from eacode import plotting

        outputs.append(plotting.plot_traces([r.trace for r in results], out / "seesaw.png"))
    _write_manifest(out, args, argv, seed, inputs, started, outputs)
    reached = int(np.sum(finals >= 5 / 6 - 1e-12))
    summary = {"best_objective": float(finals.max()), "worst_objective": float(finals.min()),
               "runs": len(results), "reached_classical": reached,
               "best": best.to_json_obj()}
    alice, bob = best.strategy.angles()

    def ang(a):
        return "n/a" if a is None else _fmt(a)

    lines = [
        f"runs: {len(results)}  best: {_fmt(finals.max())}  worst: {_fmt(finals.min())}",
        f"runs reaching 5/6: {reached}",
        f"best angles  alice: {ang(alice[0])}, {ang(alice[1])}  bob: {ang(bob[0])}, {ang(bob[1])}",
    ]
    _emit(args, summary, lines)
    return 0


def cmd_truth_table(args, argv) -> int:
    started = time.time()
    inputs = _Inputs()
    seed = args.seed if args.seed is not None else _default_seed()
    ch = parse_channel(args.channel, inputs)
    rng = chan.make_rng(seed)
    xs = rng.integers(0, ch.num_inputs, size=args.n)
    ys = chan.sample_outputs(ch, xs, rng)
    table = chan.empirical_table(np.stack([xs, ys], axis=1), ch.num_inputs, ch.num_outputs)
    value = chan.inquisition(table, ch.probs)

    out = _out_dir(args)
    path = out / "truth_table.csv"
    path.write_text(chan.table_to_csv(table, ch.output_labels, ch.input_labels))
    outputs = [path]
    if args.figures:
        from eacode import plotting

        outputs.append(plotting.plot_truth_table(chan.normalize_rows(table), ch.probs,
                                                 ch.input_labels, ch.output_labels,
                                                 out / "truth_table.png"))
    _write_manifest(out, args, argv, seed, inputs, started, outputs, {"inquisition": value})
    _emit(args, {"inquisition": value, "n": args.n, "seed": seed},
          [f"samples: {args.n}", f"inquisition: {_fmt(value)}"])
    return 0


def cmd_tomo(args, argv) -> int:
    started = time.time()
    inputs = _Inputs()
    seed = args.seed if args.seed is not None else _default_seed()
    out = _out_dir(args)

    if args.tomo_command == "simulate":
        rho = parse_state(args.state, inputs)
        counts = tomography.simulate_counts(rho, n_scale=args.n_scale, seed=seed)
        path = out / args.name
        tomography.save_counts(counts, path)
        _write_manifest(out, args, argv, seed, inputs, started, [path])
        _emit(args, {"counts": counts.counts.tolist(), "file": str(path)},
              [f"wrote {len(counts.counts)} settings to {path}",
               f"total counts: {int(counts.counts.sum())}"])
        return 0

    counts = tomography.load_counts(inputs.read(args.counts))
    target = states.PHI_PLUS_KET
    if args.tomo_command == "reconstruct":
        linear = tomography.linear_inversion(counts)
        rho = tomography.mle_reconstruct(counts)
        report = tomography.reconstruction_report(rho, target, linear=linear)
        if args.true_state:
            true = parse_state(args.true_state, inputs)
            report["fidelity_to_true_state"] = states.fidelity(rho, true)
        path = out / "reconstruction.json"
        tomography.save_report(report, path)
        outputs = [path]
        if args.figures:
            from eacode import plotting

            outputs.append(plotting.plot_density_matrix(rho.matrix, out / "rho.png"))
        _write_manifest(out, args, argv, seed, inputs, started, outputs)
        m = report["metrics"]
        lines = [f"fidelity with Phi+: {_fmt(m['fidelity'])}",
                 f"tangle: {_fmt(m['tangle'])}", f"purity: {_fmt(m['purity'])}"]
        if "fidelity_to_true_state" in report:
            lines.append(f"fidelity with true state: {_fmt(report['fidelity_to_true_state'])}")
        _emit(args, report, lines)
        return 0

    # bootstrap
    boot = tomography.bootstrap_errors(counts, runs=args.runs, seed=seed, workers=args.workers)
    rho = tomography.mle_reconstruct(counts)
    report = tomography.reconstruction_report(rho, target, bootstrap=boot)
    path = out / "bootstrap.json"
    tomography.save_report(report, path)
    _write_manifest(out, args, argv, seed, inputs, started, [path])
    m = report["metrics"]
    _emit(args, report, [
        f"fidelity with Phi+: {_fmt(m['fidelity'])} +/- {_fmt(boot.fidelity_std)}",
        f"tangle: {_fmt(m['tangle'])} +/- {_fmt(boot.tangle_std)}",
        f"bootstrap runs: {args.runs}",
    ])
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eacode",
        description="Entanglement-assisted coding over the butterfly channel.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a JSON summary")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=None,
                        help=f"master seed (default: ${SEED_ENV} or 0)")
    seeded.add_argument("--out", default=".", help="output directory")
    seeded.add_argument("--figures", action="store_true", help="also render PNG figures")
    seeded.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("exact", parents=[common], help="exact success probability")
    p.add_argument("--state", default="phi-plus", help="phi-plus | werner:p | mixed | FILE")
    p.add_argument("--strategy", default="chsh", help="chsh | FILE")
    p.add_argument("--channel", default="butterfly", help="butterfly | FILE")
    p.add_argument("--box", default=None, help="pr | uniform | FILE (replaces the state)")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("classical-opt", parents=[common], help="best classical code")
    p.add_argument("--channel", default="butterfly", help="butterfly | identity:N | FILE")
    p.add_argument("--messages", type=int, default=2)
    p.add_argument("--out", default=None, help="directory for code.json")
    p.set_defaults(func=cmd_classical_opt)

    p = sub.add_parser("simulate", parents=[common, seeded], help="Monte Carlo trials")
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--backend", choices=montecarlo.BACKENDS, default="direct")
    p.add_argument("--state", default="phi-plus")
    p.add_argument("--strategy", default="chsh")
    p.add_argument("--channel", default="butterfly")
    p.add_argument("--box", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common, seeded], help="Werner-state sweep")
    p.add_argument("--werner", default="0:1:11", help="p0:p1:steps")
    p.add_argument("--n", type=int, default=100_000, help="trials per point (0: exact only)")
    p.add_argument("--backend", choices=montecarlo.BACKENDS, default="direct")
    p.add_argument("--strategy", default="chsh")
    p.add_argument("--channel", default="butterfly")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("seesaw", parents=[common, seeded], help="seesaw optimization")
    p.add_argument("--seeds", type=int, default=10, help="number of random starts")
    p.add_argument("--state", default="phi-plus")
    p.add_argument("--channel", default="butterfly")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_seesaw)

    p = sub.add_parser("truth-table", parents=[common, seeded],
                       help="sampled channel truth table")
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--channel", default="butterfly")
    p.set_defaults(func=cmd_truth_table)

    p = sub.add_parser("tomo", help="state tomography")
    tsub = p.add_subparsers(dest="tomo_command", required=True)
    t = tsub.add_parser("simulate", parents=[common, seeded], help="simulate counts")
    t.add_argument("--state", default="phi-plus")
    t.add_argument("--n-scale", type=float, default=1e4)
    t.add_argument("--name", default="counts.csv", help="output file name")
    t = tsub.add_parser("reconstruct", parents=[common, seeded], help="MLE reconstruction")
    t.add_argument("counts")
    t.add_argument("--true-state", default=None, help="report fidelity to this state")
    t = tsub.add_parser("bootstrap", parents=[common, seeded], help="Poisson bootstrap")
    t.add_argument("counts")
    t.add_argument("--runs", type=int, default=200)
    p.set_defaults(func=cmd_tomo)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
