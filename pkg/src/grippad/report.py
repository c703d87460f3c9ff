"""Trace comparison reports: console table, gnuplot data file, figures.

The report path reads one or more trace CSVs, prints a comparison table,
writes a gnuplot-compatible data file (one indexed block per trace), and
renders matplotlib figures (force tracking and CoP distance) next to it.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import TraceSchemaError
from .trace import load_trace_csv


GNUPLOT_COLUMNS = ("tick", "time_s", "force_mean_n", "force_ref_n",
                   "cop_l_dist_m", "cop_r_dist_m", "slip_flag")


def _settling_index(force: np.ndarray, ref: np.ndarray, deadzone: float,
                    window: int = 30) -> int | None:
    ok = np.abs(force - ref) <= deadzone + 1e-12
    run = 0
    for i in range(len(ok)):
        run = run + 1 if ok[i] else 0
        if run >= window:
            return i - window + 1
    return None


def trace_stats(cols: dict, deadzone: float, cop_floor: float = 0.2) -> dict:
    force = cols["force_mean_n"]
    ref = cols["force_ref_n"]
    time_s = cols["time_s"]
    settle = _settling_index(force, ref, deadzone)
    post = slice(settle, None) if settle is not None else slice(len(force) * 7 // 10, None)
    slips = sum(1 for s in cols["slip"] if s.startswith("slip"))
    gripped = force > cop_floor
    if gripped.any():
        cop_max = max(cols["cop_l_dist_m"][gripped].max(),
                      cols["cop_r_dist_m"][gripped].max())
    else:
        cop_max = 0.0
    return {
        "ticks": len(force),
        "settling_time_s": None if settle is None else float(time_s[settle]),
        "force_mae_n": float(np.mean(np.abs(force[post] - ref[post]))),
        "max_cop_distance_mm": float(cop_max * 1e3),
        "slip_events": slips,
    }


def _label(path) -> str:
    path = str(path)
    base = os.path.basename(path)
    parent = os.path.basename(os.path.dirname(path))
    return f"{parent}/{base}" if parent else base


def load_traces(paths) -> list[tuple[str, dict]]:
    traces = [(_label(p), load_trace_csv(p)) for p in paths]
    if not traces:
        raise TraceSchemaError("no traces given")
    return traces


def comparison_table(traces, deadzone: float) -> str:
    header = (f"{'trace':<28} {'ticks':>6} {'settle_s':>9} "
              f"{'force_mae_n':>12} {'max_cop_mm':>11} {'slips':>6}")
    lines = [header, "-" * len(header)]
    for name, cols in traces:
        s = trace_stats(cols, deadzone)
        settle = "-" if s["settling_time_s"] is None else f"{s['settling_time_s']:.3f}"
        lines.append(
            f"{name:<28} {s['ticks']:>6d} {settle:>9} "
            f"{s['force_mae_n']:>12.4f} {s['max_cop_distance_mm']:>11.3f} {s['slip_events']:>6d}"
        )
    return "\n".join(lines)


def write_gnuplot_data(path, traces) -> None:
    """One gnuplot index block per trace with the documented columns."""
    with open(path, "w") as fh:
        fh.write("# grippad report data; blocks separated by two blank lines\n")
        fh.write("# columns: " + " ".join(GNUPLOT_COLUMNS) + "\n")
        for i, (name, cols) in enumerate(traces):
            fh.write(f"# block {i}: {name}\n")
            slips = np.array([1 if s.startswith("slip") else 0 for s in cols["slip"]])
            for k in range(len(cols["tick"])):
                fh.write(
                    f"{int(cols['tick'][k])} {cols['time_s'][k]:.6f} "
                    f"{cols['force_mean_n'][k]:.9g} {cols['force_ref_n'][k]:.9g} "
                    f"{cols['cop_l_dist_m'][k]:.9g} {cols['cop_r_dist_m'][k]:.9g} "
                    f"{slips[k]}\n"
                )
            fh.write("\n\n")


def render_figures(out_dir, traces, deadzone: float, cop_bound_m: float = 0.010):
    """Force-tracking and CoP-distance figures, saved as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, cols in traces:
        ax.plot(cols["time_s"], cols["force_mean_n"], label=f"{name} force", lw=1.2)
        ax.plot(cols["time_s"], cols["force_ref_n"], ls="--", lw=0.9,
                label=f"{name} reference")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("mean grip force [N]")
    ax.set_title("Grip force tracking")
    ax.legend(fontsize=7, loc="best")
    ax.grid(alpha=0.3)
    path = os.path.join(out_dir, "report_force.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for name, cols in traces:
        cop_mm = np.maximum(cols["cop_l_dist_m"], cols["cop_r_dist_m"]) * 1e3
        ax.plot(cols["time_s"], cop_mm, lw=1.2, label=name)
        slip_mask = np.array([s.startswith("slip") for s in cols["slip"]])
        if slip_mask.any():
            ax.plot(cols["time_s"][slip_mask], cop_mm[slip_mask], "x", ms=4,
                    label=f"{name} slip ticks")
    ax.axhline(cop_bound_m * 1e3, color="k", ls=":", lw=1.0, label="CoP bound")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("max CoP distance [mm]")
    ax.set_title("CoP distance")
    ax.legend(fontsize=7, loc="best")
    ax.grid(alpha=0.3)
    path = os.path.join(out_dir, "report_cop.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def run_report(trace_paths, out_dir, deadzone: float = 0.05,
               figures: bool = True) -> str:
    """Full report pipeline; returns the comparison table text."""
    traces = load_traces(trace_paths)
    os.makedirs(out_dir, exist_ok=True)
    table = comparison_table(traces, deadzone)
    write_gnuplot_data(os.path.join(out_dir, "report.dat"), traces)
    if figures:
        render_figures(out_dir, traces, deadzone)
    return table
