"""Command line entry point: ``gmeasure <subcommand> --config cfg.json``.

Every subcommand writes ``<out>/<subcommand>.json`` (and a CSV where there
is bulk data), prints one summary line and exits with 0 on success, 2 when
the horizon was exceeded (the partial report is still written) and 1 on
configuration errors. Errors go to stderr as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .analysis import (
    LipschitzSpec,
    cftp_concentration_bound,
    empirical_deviation,
    entropy_noise_floor,
    smoothing_bias_floor,
    relative_entropy_rate,
    uniqueness_criteria,
)
from .cftp import (
    coalescence_curve,
    one_step_gap,
    phase_gap,
    sample_stationary,
    sample_windows,
    theta_samples,
)
from .config import ExperimentConfig, canonical_json
from .coupling import coupling_table
from .decomposition import DISCRETE, GreedyDecomposition, decompose, label_entropy
from .errors import GMeasureError, HorizonExceeded, InvalidParams
from .kernels import Kernel
from .past import PairPast, Past, random_ordered_pair, random_past
from .stream import replica_seed

REPORT_SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_HORIZON = 0, 1, 2
MAX_COUPLING_PAIRS = 100_000
# seed offset for the second, independent sample set of entropy-rate
SECOND_SET = 1 << 40


class Outcome:
    """What a subcommand produced: the report body, extra files, exit code."""

    def __init__(self, result: dict, summary: str, files: dict[str, str] | None = None, code: int = EXIT_OK):
        self.result = result
        self.summary = summary
        self.files = files or {}
        self.code = code


def _decomposition(cfg: ExperimentConfig, kernel: Kernel):
    dec = decompose(kernel, cfg.decomposition.mode, cfg.decomposition.K)
    if isinstance(dec, GreedyDecomposition):
        dec.require_monotone()
    return dec


def _survival_csv(survival: np.ndarray, stderr: np.ndarray) -> str:
    rows = ["n,survival,stderr"]
    rows += [f"{n},{float(v)!r},{float(e)!r}" for n, (v, e) in enumerate(zip(survival, stderr))]
    return "\n".join(rows) + "\n"


def cmd_sample(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    dec = _decomposition(cfg, kernel)
    try:
        run = sample_stationary(dec, cfg.run.n, cfg.run.seed, cfg.run.horizon_limit)
    except HorizonExceeded as exc:
        part = exc.partial
        done = 0 if part is None else len(part.window)
        result = {
            "status": "horizon_exceeded",
            "failed_position": exc.position,
            "horizon_limit": exc.depth,
            "partial": None if part is None else part.to_report(),
            # the failing position is the single censored observation
            "survival_at_horizon": 1.0 / (done + 1),
            "positions_observed": done + 1,
        }
        files = {"sample.csv": part.to_csv()} if part is not None else {}
        return Outcome(result, f"sample: horizon {exc.depth} exceeded at position {exc.position}", files,
                       EXIT_HORIZON)
    result = {"status": "ok", "run": run.to_report(),
              "symbol_counts": {str(a): int(np.count_nonzero(run.window == a)) for a in range(1, kernel.s + 1)}}
    return Outcome(result, f"sample: n={cfg.run.n} theta_max={result['run']['theta_max']}",
                   {"sample.csv": run.to_csv()})


def cmd_theta(cfg: ExperimentConfig, workers: int) -> Outcome:
    dec = _decomposition(cfg, cfg.build_kernel())
    H = cfg.run.horizon_limit
    ts = theta_samples(dec, cfg.run.replicas, cfg.run.seed, H, workers)
    R = cfg.run.replicas
    th = np.where(ts.values < 0, H + 1, ts.values)
    survival = 1.0 - np.cumsum(np.bincount(th, minlength=H + 2))[: H + 1] / R
    survival = np.clip(survival, 0.0, 1.0)
    stderr = np.sqrt(survival * (1 - survival) / R)
    done = ts.values[ts.values >= 0]
    result = {
        "status": "horizon_exceeded" if ts.censored else "ok",
        "replicas": R,
        "horizon_limit": H,
        "censored": ts.censored,
        "survival_at_horizon": float(survival[H]),
        "survival_stderr": float(stderr[H]),
        "theta_mean_uncensored": float(done.mean()) if done.size else None,
        "theta_histogram": ts.histogram(),
        "order_violations": ts.order_violations,
    }
    rows = ["replica,theta"] + [f"{i},{int(v)}" for i, v in enumerate(ts.values)]
    files = {"theta.csv": "\n".join(rows) + "\n", "theta_survival.csv": _survival_csv(survival, stderr)}
    code = EXIT_HORIZON if ts.censored else EXIT_OK
    return Outcome(result, f"theta: replicas={R} censored={ts.censored} P(theta>{H})={survival[H]:.4g}",
                   files, code)


def cmd_decompose(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    dec = decompose(kernel, cfg.decomposition.mode, cfg.decomposition.K)
    result = dec.report()
    if dec.mode == DISCRETE:
        ent = label_entropy(dec)
        result["K"] = int(kernel.depth)
        result["entropy"] = {"value": ent.value, "partial": ent.partial, "remainder": ent.remainder,
                             "depth": ent.depth}
    else:
        result["K"] = dec.K
        result["K_requested"] = dec.K_requested
        result["cumulative_weights"] = [float(v) for v in dec.cum_weights]
        result["monotone_violations"] = dec.monotone_violations
        result["entropy"] = None
    return Outcome(result, f"decompose: mode={dec.mode} weight0={result['weights'][0]:.6g} "
                           f"residual={result['residual']:.3g}")


def cmd_coupling_check(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    s = kernel.s
    rng = np.random.default_rng(cfg.run.seed)
    pairs = min(cfg.run.replicas, MAX_COUPLING_PAIRS)
    marg = diag = order = 0.0
    for _ in range(pairs):
        pp = PairPast(random_past(rng, s), random_past(rng, s))
        left, right = coupling_table(kernel, pp).marginals()
        marg = max(marg, float(np.abs(left - kernel.prob_vector(pp.left)).max()),
                   float(np.abs(right - kernel.prob_vector(pp.right)).max()))
        x = random_past(rng, s)
        diag = max(diag, coupling_table(kernel, PairPast(x, x)).off_diagonal_mass())
        if kernel.attractive:
            order = max(order, coupling_table(kernel, random_ordered_pair(rng, s)).order_violation_mass())
    extremal = coupling_table(kernel, PairPast(Past.minimal(), Past.maximal(s)))
    result = {
        "pairs": pairs,
        "max_marginal_error": marg,
        "max_identical_off_diagonal": diag,
        "max_ordered_violation": order if kernel.attractive else None,
        "attractive": bool(kernel.attractive),
        "extremal_table": extremal.cells.tolist(),
    }
    return Outcome(result, f"coupling-check: pairs={pairs} marginal_err={marg:.2e} offdiag={diag:.2e}",
                   {"coupling.csv": extremal.to_csv()})


def cmd_phases(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    dec = _decomposition(cfg, kernel)
    H, R = cfg.run.horizon_limit, cfg.run.replicas
    curve = coalescence_curve(dec, H, R, cfg.run.seed, workers)
    gap = phase_gap(kernel, cfg.run.n, R, cfg.run.seed, workers)
    crit = uniqueness_criteria(kernel)
    result = {
        "status": "horizon_exceeded" if curve.censored else "ok",
        "replicas": R,
        "horizon_limit": H,
        "survival_at_horizon": curve.at(H),
        "survival_stderr": float(curve.stderr[H]),
        "censored": curve.censored,
        "one_step_gap": one_step_gap(kernel),
        "phase_gap": {"n": cfg.run.n, "gap": gap.gap, "stderr": gap.stderr,
                      "top_from_min": gap.top_from_min, "top_from_max": gap.top_from_max,
                      "order_violations": gap.order_violations},
        "criteria": {k: v["verdict"] for k, v in crit.items() if isinstance(v, dict)},
    }
    code = EXIT_HORIZON if curve.censored else EXIT_OK
    return Outcome(result, f"phases: P(theta>{H})={curve.at(H):.4g} gap(n={cfg.run.n})={gap.gap:.4g}",
                   {"phases.csv": _survival_csv(curve.survival, curve.stderr)}, code)


def _functional(cfg: ExperimentConfig, s: int, n: int):
    if cfg.analysis.functional == "mean":
        spec = LipschitzSpec.block_mean(n, 1, 1.0)
        return spec, lambda W: (W.mean(axis=1) - 1.0) / (s - 1)
    spec = LipschitzSpec.indicator(n, 0)
    return spec, lambda W: (W[:, 0] == s).astype(np.float64)


def cmd_concentration(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    dec = _decomposition(cfg, kernel)
    n, R = cfg.run.n, cfg.run.replicas
    if R < 100:
        raise InvalidParams("concentration needs run.replicas >= 100")
    windows, thetas, viol = sample_windows(dec, n, R, cfg.run.seed, cfg.run.horizon_limit, workers)
    spec, f = _functional(cfg, kernel.s, n)
    values = f(windows)
    th0 = thetas[:, 0].astype(np.float64)
    mean = float(th0.mean())
    upper = mean + 1.96 * float(th0.std(ddof=1)) / math.sqrt(R)
    checks = []
    for eps in cfg.analysis.eps:
        est = empirical_deviation(values, eps)
        bound = cftp_concentration_bound(upper, eps, spec)
        checks.append({"eps": eps, "fraction": est.fraction, "ci_low": est.ci_low, "ci_high": est.ci_high,
                       "bound": bound, "bound_uncapped": cftp_concentration_bound(upper, eps, spec, cap=False),
                       "vacuous": bound >= 1.0, "holds": est.ci_high <= bound})
    result = {"n": n, "replicas": R, "functional": spec.name, "l2sq": spec.l2sq,
              "theta_mean": mean, "theta_mean_upper": upper, "order_violations": viol, "checks": checks}
    ok = all(c["holds"] for c in checks)
    return Outcome(result, f"concentration: E[theta]<={upper:.4g} checks={len(checks)} all_hold={ok}")


def cmd_entropy_rate(cfg: ExperimentConfig, workers: int) -> Outcome:
    kernel = cfg.build_kernel()
    dec = _decomposition(cfg, kernel)
    n, R, H = cfg.run.n, cfg.run.replicas, cfg.run.horizon_limit
    if n < cfg.analysis.block + 1:
        raise InvalidParams("run.n must be at least analysis.block + 1")
    X, _, _ = sample_windows(dec, n, R, cfg.run.seed, H, workers)
    Y, _, _ = sample_windows(dec, n, R, replica_seed(cfg.run.seed, SECOND_SET), H, workers)
    rows = []
    for b in range(cfg.analysis.block + 1):
        blocks = R * (n - b)
        est = relative_entropy_rate(X, Y, b, cfg.analysis.alpha, kernel.s)
        rows.append({"block": b, "estimate": est, "noise_floor": entropy_noise_floor(blocks, blocks, b, kernel.s),
                     "smoothing_floor": smoothing_bias_floor(blocks, blocks, b, cfg.analysis.alpha, kernel.s),
                     "blocks_per_set": blocks})
    result = {"replicas_per_set": R, "n": n, "alpha": cfg.analysis.alpha, "rates": rows,
              "note": "both floors assume independent blocks; overlapping blocks within a row are correlated"}
    top = rows[-1]
    return Outcome(result, f"entropy-rate: block={top['block']} estimate={top['estimate']:.3g} "
                           f"floor={top['noise_floor']:.3g}")


def cmd_criteria(cfg: ExperimentConfig, workers: int) -> Outcome:
    report = uniqueness_criteria(cfg.build_kernel())
    verdicts = {k: v["verdict"] for k, v in report.items() if isinstance(v, dict)}
    return Outcome(report, "criteria: " + " ".join(f"{k}={v}" for k, v in verdicts.items()))


COMMANDS: dict[str, Callable[[ExperimentConfig, int], Outcome]] = {
    "sample": cmd_sample,
    "theta": cmd_theta,
    "decompose": cmd_decompose,
    "coupling-check": cmd_coupling_check,
    "phases": cmd_phases,
    "concentration": cmd_concentration,
    "entropy-rate": cmd_entropy_rate,
    "criteria": cmd_criteria,
}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def build_report(name: str, cfg: ExperimentConfig, outcome: Outcome) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "command": name,
        "version": __version__,
        "config_digest": cfg.digest(),
        "config": cfg.normalized(),
        "exit_code": outcome.code,
        "result": _clean(outcome.result),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def run_subcommand(name: str, cfg: ExperimentConfig, out: str | Path, workers: int = 1) -> int:
    if name not in COMMANDS:
        raise InvalidParams(f"unknown subcommand {name!r}")
    try:
        outcome = COMMANDS[name](cfg, workers)
    except HorizonExceeded as exc:
        # subcommands without their own partial handling still report what failed
        result = {
            "status": "horizon_exceeded",
            "failed_position": exc.position,
            "horizon_limit": exc.depth,
            "replica": exc.replica,
            "partial": None if exc.partial is None else exc.partial.to_report(),
        }
        where = "" if exc.replica is None else f" in replica {exc.replica}"
        outcome = Outcome(result, f"{name}: horizon {exc.depth} exceeded at position {exc.position}{where}",
                          code=EXIT_HORIZON)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    report = build_report(name, cfg, outcome)
    (out / f"{name}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for fname, text in outcome.files.items():
        (out / fname).write_text(text)
    print(outcome.summary)
    return outcome.code


def _error(kind: str, message: str) -> None:
    sys.stderr.write(canonical_json({"error": kind, "message": message}) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmeasure", description="Exact sampling for chains of infinite order.")
    parser.add_argument("--version", action="version", version=f"gmeasure {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--workers", type=int, default=1, help="worker processes for replicas")
        p.add_argument("--horizon", type=int, help="override run.horizon_limit")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise InvalidParams("--workers must be >= 1")
        cfg = ExperimentConfig.load(args.config).with_overrides(args.seed, args.horizon)
    except InvalidParams as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_CONFIG
    try:
        return run_subcommand(args.command, cfg, args.out, args.workers)
    except (InvalidParams, GMeasureError) as exc:
        # the config asked for something the library cannot do
        _error(type(exc).__name__, str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
