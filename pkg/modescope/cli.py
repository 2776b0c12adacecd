"""Command-line interface for modescope.

Provides subcommands for parameter sweeps, spurious-eigenvalue CDFs, AUC
tables, identity verification, single-instance decompositions and spec
fixtures. Invalid input exits with status 2; a failed verify exits with 1.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from modescope.config import OUTPUT_DIR, WORKING_POINT
from modescope.dmd_core import decompose, snapshot_pair
from modescope.export import (
    plot_cdf_svg,
    plot_sweep_svg,
    read_sweep_csv,
    write_auc_csv,
    write_cdf_csv,
    write_decomposition_json,
    write_eigenvalue_csv,
    write_scores_csv,
    write_sweep_csv,
)
from modescope.harness import (
    SWEEP_PARAMETERS,
    ExperimentConfig,
    TrialResult,
    child_seed,
    compute_auc,
    evaluate_methods,
    generate_instance,
    run_sweep,
    spurious_cdf,
    verify,
)
from modescope.logger import log_cdf, log_decompose, log_sweep
from modescope.signal_gen import make_spec


def parse_grid(text: str) -> list[float]:
    """Parse a grid given as start:stop:count or as a comma-separated list.

    Raises:
    ValueError -- If the text is malformed or count < 1.
    """
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            n = int(count)
            if n < 1:
                raise ValueError(f"grid count must be >= 1, got {n}")
            return np.linspace(float(start), float(stop), n).tolist()
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ValueError(f"Malformed grid '{text}' (expected a:b:n or v1,v2,...): {e}") from e


def load_config(args) -> ExperimentConfig:
    """Build the experiment config from --config / --no-delay and per-run overrides."""
    if getattr(args, "config", None):
        cfg = ExperimentConfig.from_json(args.config)
    elif getattr(args, "no_delay", False):
        cfg = ExperimentConfig.no_delay_point()
    else:
        cfg = ExperimentConfig.working_point()

    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "methods", None):
        overrides["methods"] = [name.strip() for name in args.methods.split(",")]
    if not overrides:
        return cfg
    return ExperimentConfig.model_validate({**cfg.model_dump(), **overrides})


def _print_config(cfg: ExperimentConfig) -> None:
    print(f"  m={cfg.m}  D={cfg.D}  N={cfg.N}  L={cfg.L}  M={cfg.M}")
    print(f"  rho={cfg.rho}  delta_theta={cfg.delta_theta}  kappa_b={cfg.kappa_b}  snr_db={cfg.snr_db}"
          f" ({cfg.noise_reference} reference)")
    print(f"  Trials: {cfg.trials}  Seed: {cfg.master_seed}")


def cmd_sweep(args):
    """Run a one-parameter sweep and write sweep.csv, auc.csv and sweep.svg.

    Arguments:
    args -- Parsed command-line arguments containing param, grid and output options. Namespace.

    Returns: None. Prints hit probabilities and AUC to stdout.
    """
    cfg = load_config(args)
    grid = parse_grid(args.grid)
    out_dir = Path(args.out)

    print(f"-- Sweep: {args.param} --")
    _print_config(cfg)
    print(f"  Grid: {', '.join(f'{v:g}' for v in grid)}")

    start = time.time()
    sweep = run_sweep(cfg, args.param, grid, workers=args.workers, keep_trials=args.scores)
    elapsed = time.time() - start

    write_sweep_csv(sweep, out_dir / "sweep.csv")
    auc = compute_auc(sweep) if len(grid) >= 2 else None
    if auc is not None:
        write_auc_csv(auc, out_dir / "auc.csv")
    if args.scores:
        write_scores_csv(sweep.trial_results, out_dir / "scores.csv")
    if not args.no_plot:
        plot_sweep_svg(sweep, out_dir / "sweep.svg")

    print(f"\n-- Hit Probability --")
    for method, prob in sweep.hit_prob.items():
        print(f"  {method.value:<14} {' '.join(f'{p:.2f}' for p in prob)}")
    if sweep.failures.any():
        print(f"  Failed trials:  {' '.join(str(f) for f in sweep.failures)}")
    if auc is not None:
        print(f"\n-- Normalized AUC --")
        for method, value in sorted(auc.items(), key=lambda kv: -kv[1]):
            print(f"  {method.value:<14} {value:.3f}")
    print(f"\n  Output:  {out_dir}")
    print(f"  Elapsed: {elapsed:.1f}s")

    log_sweep(
        parameter=args.param,
        grid=grid,
        trials=sweep.trials,
        master_seed=sweep.master_seed,
        hit_prob={m.value: p.tolist() for m, p in sweep.hit_prob.items()},
        failures=int(sweep.failures.sum()),
        auc={m.value: v for m, v in auc.items()} if auc else None,
        elapsed=round(elapsed, 3),
        out_dir=out_dir,
    )


def cmd_cdf_spur(args):
    """Pool spurious eigenvalue magnitudes per L and write cdf.csv and cdf.svg.

    Arguments:
    args -- Parsed command-line arguments containing L_grid and output options. Namespace.

    Returns: None. Prints median and 5th percentile per L to stdout.
    """
    cfg = load_config(args)
    L_grid = [int(v) for v in parse_grid(args.L_grid)]
    out_dir = Path(args.out)

    print(f"-- Spurious Eigenvalue CDF --")
    _print_config(cfg)
    print(f"  L grid: {', '.join(str(L) for L in L_grid)}")

    start = time.time()
    result = spurious_cdf(cfg, L_grid, workers=args.workers)
    elapsed = time.time() - start

    write_cdf_csv(result, out_dir / "cdf.csv")
    if not args.no_plot:
        plot_cdf_svg(result, out_dir / "cdf.svg")

    print(f"\n-- Spurious |lambda| --")
    print(f"  {'L':>4}  {'pooled':>7}  {'median':>7}  {'p05':>7}")
    for L in result.L_grid:
        print(f"  {L:>4}  {result.samples[L].size:>7}  {result.median(L):>7.3f}  {result.quantile(L, 0.05):>7.3f}")
    print(f"\n  Output:  {out_dir}")
    print(f"  Elapsed: {elapsed:.1f}s")

    log_cdf(
        L_grid=L_grid,
        trials=result.trials,
        master_seed=cfg.master_seed,
        medians={str(L): result.median(L) for L in result.L_grid},
        pool_sizes={str(L): int(result.samples[L].size) for L in result.L_grid},
        elapsed=round(elapsed, 3),
    )


def cmd_auc(args):
    """Compute normalized AUC from an existing sweep.csv.

    Arguments:
    args -- Parsed command-line arguments containing input path and optional output. Namespace.

    Returns: None. Prints AUC per method to stdout.
    """
    sweep = read_sweep_csv(Path(args.input), parameter=args.param)
    auc = compute_auc(sweep)

    print(f"-- Normalized AUC --")
    print(f"  Input: {args.input}")
    for method, value in sorted(auc.items(), key=lambda kv: -kv[1]):
        print(f"  {method.value:<14} {value:.3f}")
    if args.out:
        path = write_auc_csv(auc, Path(args.out))
        print(f"\n  Output: {path}")


def cmd_verify(args):
    """Run the operator-identity checks on seeded instances.

    Arguments:
    args -- Parsed command-line arguments containing seeds, config and perturb. Namespace.

    Returns: None. Prints a per-check summary; exits with status 1 if any check fails.
    """
    cfg = load_config(args)
    print(f"-- Verify --")
    _print_config(cfg)
    print(f"  Instances: {args.seeds}")
    if args.perturb:
        print(f"  Perturbation: {args.perturb:g} (negative control)")

    report = verify(cfg, args.seeds, perturb=args.perturb)

    print(f"\n-- Checks --")
    for name, entry in report.summary().items():
        status = "ok" if entry["failed"] == 0 else "FAIL"
        print(f"  {name:<24} {status:<5} {entry['count'] - entry['failed']}/{entry['count']}  "
              f"worst value/tol: {entry['worst_ratio']:.2e}")

    if not report.passed:
        print(f"\n{len(report.failed)} check(s) failed.")
        sys.exit(1)
    print(f"\nAll {len(report.checks)} checks passed.")


def cmd_decompose(args):
    """Decompose one seeded instance and export its eigenvalues, amplitudes and scores.

    Arguments:
    args -- Parsed command-line arguments containing trial index, config and output. Namespace.

    Returns: None. Prints the eigenvalue table and order estimates to stdout.
    """
    cfg = load_config(args)
    out_dir = Path(args.out)
    seed = child_seed(cfg.master_seed, args.trial)
    spec, _, noisy = generate_instance(cfg, seed)
    pair = snapshot_pair(noisy, cfg.L)
    decomp = decompose(pair, cfg.M)
    m_hat, scores, selections = evaluate_methods(decomp, cfg.methods, pair.n_cols)
    trial = TrialResult(trial_index=args.trial, seed=seed, m=cfg.m, m_hat=m_hat, scores=scores,
                        selections=selections, eigenvalues=decomp.eigenvalues)

    write_decomposition_json(decomp, out_dir / "decomposition.json", m_hat)
    write_eigenvalue_csv(decomp, out_dir / "eigenvalues.csv")
    write_scores_csv([trial], out_dir / "scores.csv")
    if args.save_spec:
        spec.save(out_dir / "spec.json")

    print(f"-- Decomposition (trial {args.trial}) --")
    _print_config(cfg)
    print(f"\n-- Eigenvalues --")
    for j, lam in enumerate(decomp.eigenvalues):
        print(f"  {j:>3}  |lambda|={abs(lam):.4f}  angle={np.angle(lam):+.4f}")
    print(f"\n-- Order Estimates (true m = {cfg.m}) --")
    for method, value in m_hat.items():
        print(f"  {method.value:<14} {value}{'  hit' if value == cfg.m else ''}")
    print(f"\n  Output: {out_dir}")

    log_decompose(seed=args.trial, L=cfg.L, M=cfg.M, D=cfg.D, N=cfg.N,
                  m_hat={m.value: v for m, v in m_hat.items()}, out_dir=out_dir)


def cmd_make_spec(args):
    """Write a SignalSpec JSON fixture.

    Arguments:
    args -- Parsed command-line arguments with generator parameters and output path. Namespace.

    Returns: None.
    """
    spec = make_spec(args.m, args.D, args.N, args.rho, args.dtheta, args.kappa, args.seed)
    spec.save(Path(args.out))
    print(f"-- Spec --")
    print(f"  m={spec.m}  D={spec.D}  N={spec.N}  kappa_b={spec.kappa_b:g}")
    print(f"  theta: {', '.join(f'{t:.4f}' for t in spec.theta)}")
    print(f"  Output: {args.out}")


def _add_run_options(p, *, trials=True, workers=True):
    p.add_argument("--config", help="JSON config with ExperimentConfig field names")
    p.add_argument("--no-delay", action="store_true", help="Start from the L = 1, D = 220 preset")
    p.add_argument("--seed", type=int, help="Master seed (overrides config)")
    p.add_argument("--methods", help="Comma-separated method tags (overrides config)")
    if trials:
        p.add_argument("--trials", type=int, help="Trials per grid point (overrides config)")
    if workers:
        p.add_argument("--workers", type=int, help="Worker threads (capped by MODESCOPE_THREADS)")


def main(argv=None):
    """Main CLI entry point with argument parsing."""
    parser = argparse.ArgumentParser(
        description="modescope - order detection for delay-coordinates DMD"
    )
    sub = parser.add_subparsers(dest="command")

    # sweep
    p_sweep = sub.add_parser("sweep", help="Sweep one parameter and record order-hit probabilities")
    p_sweep.add_argument("--param", required=True, help=f"Parameter to sweep ({', '.join(SWEEP_PARAMETERS)})")
    p_sweep.add_argument("--grid", required=True, help="Grid as a:b:n or a comma-separated list")
    p_sweep.add_argument("--out", default=str(OUTPUT_DIR), help=f"Output directory (default: {OUTPUT_DIR})")
    p_sweep.add_argument("--scores", action="store_true", help="Also write per-mode scores.csv")
    p_sweep.add_argument("--no-plot", action="store_true", help="Skip the SVG plot")
    _add_run_options(p_sweep)

    # cdf-spur
    p_cdf = sub.add_parser("cdf-spur", help="Empirical CDF of spurious eigenvalue magnitudes")
    p_cdf.add_argument("--L-grid", dest="L_grid", default="2,8,32,64", help="Embedding lengths (default: 2,8,32,64)")
    p_cdf.add_argument("--out", default=str(OUTPUT_DIR), help=f"Output directory (default: {OUTPUT_DIR})")
    p_cdf.add_argument("--no-plot", action="store_true", help="Skip the SVG plot")
    _add_run_options(p_cdf)

    # auc
    p_auc = sub.add_parser("auc", help="Normalized AUC of an existing sweep.csv")
    p_auc.add_argument("--in", dest="input", required=True, help="Path to sweep.csv")
    p_auc.add_argument("--param", default="snr", help="Swept parameter name (default: snr)")
    p_auc.add_argument("--out", help="Write auc.csv to this path")

    # verify
    p_verify = sub.add_parser("verify", help="Check operator identities on seeded instances")
    p_verify.add_argument("--seeds", type=int, default=10, help="Number of instances (default: 10)")
    p_verify.add_argument("--perturb", type=float, default=0.0,
                          help="Shift the leading eigenvalue before checking (negative control)")
    _add_run_options(p_verify, trials=False, workers=False)

    # decompose
    p_dec = sub.add_parser("decompose", help="Decompose one seeded instance and export it")
    p_dec.add_argument("--trial", type=int, default=0, help="Trial index of the instance (default: 0)")
    p_dec.add_argument("--out", default=str(OUTPUT_DIR), help=f"Output directory (default: {OUTPUT_DIR})")
    p_dec.add_argument("--save-spec", action="store_true", help="Also write the ground-truth spec.json")
    _add_run_options(p_dec, trials=False, workers=False)

    # make-spec
    p_spec = sub.add_parser("make-spec", help="Write a SignalSpec JSON fixture")
    p_spec.add_argument("--m", type=int, default=WORKING_POINT["m"], help="Number of modes")
    p_spec.add_argument("--D", type=int, default=WORKING_POINT["D"], help="Spatial dimension")
    p_spec.add_argument("--N", type=int, default=WORKING_POINT["N"], help="Sample count")
    p_spec.add_argument("--rho", type=float, default=WORKING_POINT["rho"], help="Common damping")
    p_spec.add_argument("--dtheta", type=float, default=WORKING_POINT["delta_theta"], help="Minimal phase gap")
    p_spec.add_argument("--kappa", type=float, default=WORKING_POINT["kappa_b"], help="Amplitude ratio")
    p_spec.add_argument("--seed", type=int, default=0, help="Generator seed (default: 0)")
    p_spec.add_argument("--out", required=True, help="Output JSON path")

    args = parser.parse_args(argv)

    commands = {
        "sweep": cmd_sweep,
        "cdf-spur": cmd_cdf_spur,
        "auc": cmd_auc,
        "verify": cmd_verify,
        "decompose": cmd_decompose,
        "make-spec": cmd_make_spec,
    }

    if args.command in commands:
        try:
            commands[args.command](args)
        except (ValueError, FileNotFoundError) as e:
            print(f"Error: {e}", file=sys.stderr)
            sys.exit(2)
    else:
        parser.print_help()


if __name__ == "__main__":
    main()
