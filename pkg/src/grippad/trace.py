"""Per-tick simulation traces: CSV emission, loading, and run summaries.

Column order and names are fixed (documented in FORMATS.md); values are
written with shortest round-trip float formatting so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import TraceSchemaError

TRACE_COLUMNS = (
    "tick",
    "time_s",
    "phase",
    "segment",
    "force_ref_n",
    "force_l_n",
    "force_r_n",
    "force_mean_n",
    "cop_l_raw_x_m",
    "cop_l_raw_y_m",
    "cop_l_x_m",
    "cop_l_y_m",
    "cop_l_dist_m",
    "cop_r_raw_x_m",
    "cop_r_raw_y_m",
    "cop_r_x_m",
    "cop_r_y_m",
    "cop_r_dist_m",
    "pad_l_y_m",
    "pad_l_z_m",
    "pad_l_pitch_rad",
    "pad_r_y_m",
    "pad_r_z_m",
    "pad_r_pitch_rad",
    "gravity_l_force_n",
    "gravity_l_torque_nm",
    "gravity_r_force_n",
    "gravity_r_torque_nm",
    "slip",
    "slip_events",
    "box_y_m",
    "box_z_m",
    "box_pitch_rad",
    "slip_offset_m",
    "slip_angle_rad",
)

_INT_COLUMNS = {"tick", "segment", "slip_events"}
_STR_COLUMNS = {"phase", "slip"}


class SimTrace:
    """Ordered collection of per-tick records with a fixed schema."""

    def __init__(self):
        self.rows: list[dict] = []

    def append(self, record: dict) -> None:
        missing = set(TRACE_COLUMNS) - set(record)
        if missing:
            raise TraceSchemaError(f"trace record missing fields: {sorted(missing)}")
        if self.rows and record["tick"] <= self.rows[-1]["tick"]:
            raise TraceSchemaError("trace ticks must be strictly increasing")
        self.rows.append(record)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        if name in _STR_COLUMNS:
            return np.array([r[name] for r in self.rows])
        return np.array([r[name] for r in self.rows], dtype=float)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self.rows:
                out = []
                for col in TRACE_COLUMNS:
                    v = row[col]
                    if col in _STR_COLUMNS:
                        out.append(str(v))
                    elif col in _INT_COLUMNS:
                        out.append(str(int(v)))
                    else:
                        out.append(repr(float(v)))
                writer.writerow(out)

    # ------------------------------------------------------------------
    # Summary statistics
    # ------------------------------------------------------------------

    def settling_tick(self, force_deadzone: float, window: int = 30) -> int | None:
        """First tick index from which the mean force stays within the dead
        zone of its reference for ``window`` consecutive ticks."""
        err = np.abs(self.column("force_mean_n") - self.column("force_ref_n"))
        ok = err <= force_deadzone + 1e-12
        n = len(ok)
        run = 0
        for i in range(n):
            run = run + 1 if ok[i] else 0
            if run >= window:
                return i - window + 1
        return None

    def summary(self, force_deadzone: float, window: int = 30,
                cop_force_floor: float = 0.2) -> dict:
        if not self.rows:
            raise TraceSchemaError("cannot summarize an empty trace")
        settle = self.settling_tick(force_deadzone, window)
        force_mean = self.column("force_mean_n")
        force_ref = self.column("force_ref_n")
        time_s = self.column("time_s")
        # CoP is only a meaningful measurement with an established grip;
        # near-zero cell forces make it pure noise
        gripped = force_mean > cop_force_floor
        if np.any(gripped):
            cop_max = max(self.column("cop_l_dist_m")[gripped].max(),
                          self.column("cop_r_dist_m")[gripped].max())
        else:
            cop_max = 0.0
        slips = self.column("slip")
        slip_rows = [s for s in slips if s.startswith("slip")]
        modes = {}
        for s in slip_rows:
            modes[s] = modes.get(s, 0) + 1
        post = slice(settle, None) if settle is not None else slice(len(self.rows) * 7 // 10, None)
        return {
            "ticks": len(self.rows),
            "duration_s": float(time_s[-1]),
            "settling_tick": settle,
            "settling_time_s": None if settle is None else float(time_s[settle]),
            "force_mae_n": float(np.mean(np.abs(force_mean[post] - force_ref[post]))),
            "final_force_ref_n": float(force_ref[-1]),
            "max_cop_distance_mm": float(cop_max * 1e3),
            "slip_events": len(slip_rows),
            "slip_modes": modes,
        }


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trace_csv(path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into column arrays, validating the schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceSchemaError(f"{path}: empty trace file") from None
        if tuple(header) != TRACE_COLUMNS:
            raise TraceSchemaError(
                f"{path}: unexpected trace schema (got {len(header)} columns, "
                f"first mismatch around {set(header) ^ set(TRACE_COLUMNS)})"
            )
        raw = list(reader)
    if not raw:
        raise TraceSchemaError(f"{path}: trace has a header but no rows")
    cols: dict[str, np.ndarray] = {}
    for i, name in enumerate(TRACE_COLUMNS):
        vals = [row[i] for row in raw]
        if name in _STR_COLUMNS:
            cols[name] = np.array(vals)
        else:
            try:
                cols[name] = np.array([float(v) for v in vals])
            except ValueError as exc:
                raise TraceSchemaError(f"{path}: bad value in column {name}: {exc}") from exc
    return cols
