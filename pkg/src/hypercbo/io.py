"""CSV and JSON writers for traces and rate estimates."""
import csv
import json
import math
import subprocess
from importlib import metadata
from pathlib import Path

import numpy as np


def _fmt(x):
    x = float(x)
    return repr(x) if math.isfinite(x) else str(x)


def trace_header(dim):
    return ["step", "t"] + [f"consensus_{k}" for k in range(dim)] + [
        "consensus_energy", "diameter", "max_gamma_defect", "mean_energy",
    ]


def write_trace_csv(trace, path, dim=None):
    """One row per record. Floats use their shortest round-trip repr, so equal
    traces give byte-identical files."""
    dim = trace.consensus.shape[1] if dim is None else dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(dim))
        for k in range(len(trace)):
            w.writerow(
                [int(trace.step[k]), _fmt(trace.time[k])]
                + [_fmt(x) for x in trace.consensus[k]]
                + [_fmt(trace.consensus_energy[k]), _fmt(trace.diameter[k]),
                   _fmt(trace.max_gamma_defect[k]), _fmt(trace.mean_energy[k])]
            )


def read_trace_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


def write_rate_csv(estimate, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "mse"])
        for n, m in zip(estimate.n_values, estimate.mse_values):
            w.writerow([int(n), _fmt(m)])


def rate_summary(estimate):
    return {
        "n_values": list(estimate.n_values),
        "mse_values": list(estimate.mse_values),
        "slope": estimate.slope,
        "intercept": estimate.intercept,
        "slope_half_width_95": estimate.half_width,
        "n_repeats": estimate.n_repeats,
        **estimate.extra,
    }


def build_id():
    """``git describe`` of the source tree, or the installed package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return "hypercbo-" + metadata.version("hypercbo")
    except metadata.PackageNotFoundError:
        return "hypercbo-unknown"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def emit_outputs(result, csv_path, json_path, config_echo, wall_time, seed=None):
    """Write a trace or a rate estimate plus its JSON summary sidecar."""
    summary = {"config": config_echo, "build_id": build_id(), "wall_time_s": wall_time}
    if seed is not None:
        summary["seed"] = seed
    if hasattr(result, "slope"):
        if csv_path:
            write_rate_csv(result, csv_path)
        summary.update(rate_summary(result))
    else:
        if csv_path:
            write_trace_csv(result, csv_path)
        if len(result):
            summary["final_consensus"] = result.final_consensus.tolist()
            summary["final_consensus_energy"] = float(result.consensus_energy[-1])
            summary["final_time"] = float(result.time[-1])
            summary["n_records"] = len(result)
    if json_path:
        write_json(summary, json_path)
    return summary
