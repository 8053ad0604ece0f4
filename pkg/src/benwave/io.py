"""On-disk formats: binary state snapshots, delimited series, run reports.

Snapshot layout (self-describing, bit-exact round trip):

* magic line ``BWSNAP01``
* one UTF-8 JSON header line: format version, grid size and scale, time
  stamp, model parameters, and the transform normalization tag
* a little-endian uint32 payload byte count
* the nodal values as little-endian float64

CSV series carry one row per time step with 17 significant digits, enough
to reproduce every double exactly.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .diagnostics import ReportCheck, RunReport
from .evolution import Trajectory
from .models import Family, Model
from .spectral import RealField, make_grid
from .waves import Branch

__all__ = [
    "SNAPSHOT_MAGIC",
    "NORMALIZATION_TAG",
    "write_snapshot",
    "read_snapshot",
    "write_series_csv",
    "write_branch_csv",
    "write_report",
    "read_report",
    "format_float",
]

SNAPSHOT_MAGIC = b"BWSNAP01\n"
NORMALIZATION_TAG = "fft-over-n"
SERIES_COLUMNS = ("t", "linf", "energy_rel_drift", "mass_rel_drift", "spectral_tail")


def format_float(x: float) -> str:
    """Fixed 17-significant-digit decimal form (lossless for float64)."""
    return format(float(x), ".17g")


def model_to_dict(model: Model) -> dict:
    return {
        "family": model.family.value,
        "alpha": model.alpha,
        "beta": model.beta,
        "delta": model.delta,
        "delta1": model.delta1,
        "delta2": model.delta2,
    }


def model_from_dict(d: dict) -> Model:
    return Model(
        family=Family(d["family"]),
        alpha=d.get("alpha", 0.0),
        beta=d.get("beta", 0.0),
        delta=d.get("delta"),
        delta1=d.get("delta1"),
        delta2=d.get("delta2"),
    )


def write_snapshot(path: str | Path, field: RealField, t: float, model: Model) -> Path:
    path = Path(path)
    header = {
        "format_version": 1,
        "n_modes": field.grid.n_modes,
        "scale": field.grid.scale,
        "t": float(t),
        "model": model_to_dict(model),
        "normalization": NORMALIZATION_TAG,
    }
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
    return path


def read_snapshot(path: str | Path) -> tuple[RealField, float, Model]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path} is not a snapshot file (bad magic {magic!r})")
        header = json.loads(fh.readline().decode("utf-8"))
        (nbytes,) = struct.unpack("<I", fh.read(4))
        payload = fh.read(nbytes)
        if len(payload) != nbytes:
            raise ValueError(f"{path}: truncated payload ({len(payload)} of {nbytes} bytes)")
    n = header["n_modes"]
    if nbytes != 8 * n:
        raise ValueError(f"{path}: payload length {nbytes} does not match n_modes {n}")
    values = np.frombuffer(payload, dtype="<f8").astype(float)
    grid = make_grid(n, header["scale"])
    model = model_from_dict(header["model"])
    return RealField(grid, values), header["t"], model


def write_series_csv(path: str | Path, traj: Trajectory) -> Path:
    path = Path(path)
    cols = (traj.times, traj.linf, traj.energy_rel_drift, traj.mass_rel_drift, traj.spectral_tail)
    lines = [",".join(SERIES_COLUMNS)]
    for row in zip(*cols):
        lines.append(",".join(format_float(x) for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


_BRANCH_COLUMNS = (
    "parameter",
    "value",
    "c",
    "alpha",
    "beta",
    "delta",
    "peak_amplitude",
    "residual_norm",
    "newton_iterations",
    "spectral_tail",
    "boundary_tail",
    "energy",
    "pohozaev_r1",
    "pohozaev_r2",
    "pohozaev_r4",
    "sign_changes",
)


def write_branch_csv(path: str | Path, branch: Branch) -> Path:
    from .diagnostics import count_sign_changes

    path = Path(path)
    lines = [",".join(_BRANCH_COLUMNS)]
    for value, wave in branch.points:
        poho = wave.pohozaev
        row = [
            branch.parameter,
            format_float(value),
            format_float(wave.velocity),
            format_float(wave.model.alpha),
            format_float(wave.model.beta),
            format_float(wave.model.delta) if wave.model.delta is not None else "",
            format_float(float(np.max(np.abs(wave.profile.values)))),
            format_float(wave.residual_norm),
            str(wave.newton_iterations),
            format_float(wave.spectral_tail),
            format_float(wave.boundary_tail),
            format_float(wave.energy),
            format_float(poho.r1) if poho else "",
            format_float(poho.r2) if poho else "",
            format_float(poho.r4) if poho else "",
            str(count_sign_changes(wave.profile)),
        ]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _json_default(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Family):
        return obj.value
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_report(report: RunReport, directory: str | Path) -> tuple[Path, Path]:
    """Write ``report.json`` and a human-readable ``report.txt``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / "report.json"
    doc = {
        "name": report.name,
        "kind": report.kind,
        "config": report.config,
        "summary": report.summary,
        "checks": [dataclasses.asdict(c) for c in report.checks],
        "artifacts": report.artifacts,
        "passed": report.passed,
    }
    json_path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")

    lines = [
        f"experiment : {report.name}",
        f"kind       : {report.kind}",
        f"status     : {'PASS' if report.passed else 'FAIL'}",
        "",
        "summary",
        "-------",
    ]
    for key, val in report.summary.items():
        if isinstance(val, float):
            val = format_float(val)
        lines.append(f"  {key} = {val}")
    if report.checks:
        lines += ["", "checks", "------"]
        for c in report.checks:
            verdict = "PASS" if c.passed else "FAIL"
            lines.append(
                f"  [{verdict}] {c.name}: {format_float(c.value)} {c.op} {format_float(c.threshold)}"
            )
    if report.artifacts:
        lines += ["", "artifacts", "---------"]
        lines += [f"  {a}" for a in report.artifacts]
    txt_path = directory / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n")
    return json_path, txt_path


def read_report(path: str | Path) -> dict:
    path = Path(path)
    doc = json.loads(path.read_text())
    for key in ("name", "kind", "checks"):
        if key not in doc:
            raise ValueError(f"{path} is not a run report (missing {key!r})")
    return doc


def reverify_report(doc: dict) -> tuple[bool, list[str]]:
    """Recompute every recorded threshold comparison from its stored numbers.

    Returns overall pass and one status line per check; a stored verdict
    that disagrees with the recomputation is flagged.
    """
    all_ok = True
    lines = []
    for item in doc["checks"]:
        chk = ReportCheck.compare(item["name"], item["value"], item["threshold"], item["op"])
        stored = bool(item["passed"])
        status = "PASS" if chk.passed else "FAIL"
        note = "" if chk.passed == stored else "  (stored verdict disagrees)"
        lines.append(
            f"[{status}] {chk.name}: {format_float(chk.value)} {chk.op} "
            f"{format_float(chk.threshold)}{note}"
        )
        if not chk.passed or chk.passed != stored:
            all_ok = False
    return all_ok, lines
