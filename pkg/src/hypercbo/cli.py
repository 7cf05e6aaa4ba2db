"""Command line entry point.

Exit codes: 0 success, 1 parse/validation error, 2 runtime failure of the
dynamics, 3 I/O error.
"""
import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, parse_config
from .dynamics import manifold_defect_scaling, run
from .errors import NonFiniteState, ParseError, ProjectionDiverged, SingularPoint, ValidationError
from .meanfield import (
    consensus_lln_rate, coupled_meanfield_rate, empirical_measure_convergence, parse_test_function,
)
from .presets import PRESETS, evaluate_preset

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def _sim_flags(p):
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--manifold", help='e.g. "sphere:radius=1,dim=3" or "torus:R=1,r=0.5"')
    p.add_argument("--objective", help='e.g. "ackley:vstar=0,0,1"')
    p.add_argument("--n", type=int, help="number of particles")
    p.add_argument("--dt", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--stop", dest="stop_rule", help='"fixed", "diameter:EPS" or "residual:EPS"')
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--summary", help="JSON summary path (default: CSV path with .json)")
    p.add_argument("--jobs", dest="n_jobs", type=int, help="worker threads (default: all cores)")


def build_parser():
    parser = argparse.ArgumentParser(prog="hypercbo", description="Consensus-based optimization on hypersurfaces")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one seeded run and write its trace")
    _sim_flags(p)

    p = sub.add_parser("rates", help="mean-field rate experiments")
    p.add_argument("kind", choices=["lln", "coupled", "weak"])
    _sim_flags(p)
    p.add_argument("--n-values", dest="n_values", help="comma-separated particle counts")
    p.add_argument("--repeats", dest="n_repeats", type=int)
    p.add_argument("--m-reference", dest="m_reference", type=int)
    p.add_argument("--t-check", dest="t_check", type=float)
    p.add_argument("--test-function", dest="test_function", help='"coord:k", "coordsq:k" or "const"')

    p = sub.add_parser("defect-scan", help="pre-projection surface defect versus dt")
    _sim_flags(p)
    p.add_argument("--dt-list", dest="dt_list", help="comma-separated, strictly decreasing")
    p.add_argument("--unprojected", action="store_const", const=True, default=None,
                   help="never project; report the accumulated defect")

    p = sub.add_parser("bench", help="success rate of the Ackley presets over many seeds")
    _sim_flags(p)
    p.add_argument("--preset", choices=["all", *PRESETS])
    p.add_argument("--seeds", dest="n_seeds", type=int)
    p.add_argument("--threshold", type=float, help="success distance to the minimizer")
    return parser


def _config_from_args(args):
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "verbose", "kind", "command")}
    flags["command"] = args.command if args.command != "rates" else f"rates-{args.kind}"
    text = None
    if args.config:
        text = Path(args.config).read_text()
    return parse_config(text, flags)


def _summary_path(cfg):
    if cfg.summary:
        return cfg.summary
    if cfg.out:
        return str(Path(cfg.out).with_suffix(".json"))
    return None


def execute(cfg: ExperimentConfig):
    """Run the configured command; returns the JSON summary dict."""
    t0 = time.perf_counter()
    if cfg.command == "run":
        sim = cfg.sim_config()
        trace = run(sim)
        return io.emit_outputs(trace, cfg.out, _summary_path(cfg), cfg.echo(), time.perf_counter() - t0, cfg.seed)

    if cfg.command.startswith("rates-"):
        sim = cfg.sim_config()
        rp = cfg.rate_params()
        if cfg.command == "rates-lln":
            est = consensus_lln_rate(sim.manifold, sim.objective, sim.alpha, rp["n_values"], rp["n_repeats"],
                                     rp["m_reference"], seed=cfg.seed)
        elif cfg.command == "rates-coupled":
            est = coupled_meanfield_rate(sim, rp["n_values"], rp["m_reference"], cfg.t_check, rp["n_repeats"],
                                         seed=cfg.seed, n_jobs=cfg.n_jobs)
        else:
            est = empirical_measure_convergence(sim, parse_test_function(cfg.test_function), rp["n_values"],
                                                rp["m_reference"], cfg.t_check, rp["n_repeats"], seed=cfg.seed,
                                                n_jobs=cfg.n_jobs)
        return io.emit_outputs(est, cfg.out, _summary_path(cfg), cfg.echo(), time.perf_counter() - t0, cfg.seed)

    if cfg.command == "defect-scan":
        sim = cfg.sim_config()
        rows = manifold_defect_scaling(sim, cfg.dt_list, project=not cfg.unprojected)
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write("dt,max_gamma_defect\n")
                for dt, d in rows:
                    fh.write(f"{dt!r},{d!r}\n")
        summary = {
            "config": cfg.echo(), "build_id": io.build_id(), "seed": cfg.seed,
            "wall_time_s": time.perf_counter() - t0,
            "dt": [r[0] for r in rows], "max_gamma_defect": [r[1] for r in rows],
            "strictly_decreasing": bool(all(b[1] < a[1] for a, b in zip(rows, rows[1:]))),
        }
        if _summary_path(cfg):
            io.write_json(summary, _summary_path(cfg))
        return summary

    if cfg.command == "bench":
        names = list(PRESETS) if cfg.preset == "all" else [cfg.preset]
        results = {}
        for name in names:
            res = evaluate_preset(name, range(cfg.seed, cfg.seed + cfg.n_seeds), cfg.threshold, cfg.n_jobs)
            results[name] = {
                "success_rate": res.success_rate,
                "median_distance": float(np.median(res.distances)),
                "distances": res.distances.tolist(),
            }
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write("preset,seed,distance\n")
                for name in names:
                    for s, d in zip(range(cfg.seed, cfg.seed + cfg.n_seeds), results[name]["distances"]):
                        fh.write(f"{name},{s},{d!r}\n")
        summary = {"config": cfg.echo(), "build_id": io.build_id(), "seed": cfg.seed,
                   "wall_time_s": time.perf_counter() - t0, "presets": results}
        if _summary_path(cfg):
            io.write_json(summary, _summary_path(cfg))
        return summary

    raise ValidationError(f"unknown command {cfg.command!r}")


def _report(summary):
    if "presets" in summary:
        for name, r in summary["presets"].items():
            print(f"{name:16s} success {r['success_rate']:.2%}  median distance {r['median_distance']:.3g}")
    elif "slope" in summary:
        for n, m in zip(summary["n_values"], summary["mse_values"]):
            print(f"N={n:<8d} mse={m:.4g}")
        print(f"slope {summary['slope']:.3f} +/- {summary['slope_half_width_95']:.3f}")
    elif "max_gamma_defect" in summary:
        for dt, d in zip(summary["dt"], summary["max_gamma_defect"]):
            print(f"dt={dt:<10g} defect={d:.4g}")
    elif "final_consensus" in summary:
        print("final consensus", " ".join(f"{x:.6f}" for x in summary["final_consensus"]))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config_from_args(args)
        summary = execute(cfg)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ProjectionDiverged, NonFiniteState, SingularPoint) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    _report(summary)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
