"""File outputs: binary snapshots, CSV tables, JSON manifests.

All writes are atomic (temp file in the target directory, then rename), so a
crashed job never leaves a half-written artifact.  Every output directory
gets a manifest.json that is sufficient to re-run the job: the full echoed
config, its hash, and the build identifier.
"""

from __future__ import annotations

import json
import os
import struct
import subprocess
import tempfile

import numpy as np

import capns
from capns.grid import Grid, make_grid
from capns.solver import State, Trajectory

_HEADER = struct.Struct("<qqdd")  # dim, n, L, t


def atomic_write_bytes(path: str, payload: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def build_id() -> str:
    """git describe of the working tree, or the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"capns-{capns.__version__}"


# ---------------------------------------------------------------------------
# snapshots


def snapshot_bytes(grid: Grid, state: State) -> bytes:
    """Flat little-endian snapshot: header (dim, n, L, t), then q, then u."""
    head = _HEADER.pack(grid.dim, grid.n, grid.length, state.t)
    q = np.ascontiguousarray(state.q, dtype="<f8")
    u = np.ascontiguousarray(state.u, dtype="<f8")
    return head + q.tobytes() + u.tobytes()


def write_snapshot(path: str, grid: Grid, state: State) -> None:
    atomic_write_bytes(path, snapshot_bytes(grid, state))


def read_snapshot(path: str) -> tuple:
    """Returns (grid, state) from a snapshot file."""
    with open(path, "rb") as fh:
        blob = fh.read()
    dim, n, L, t = _HEADER.unpack_from(blob, 0)
    grid = make_grid(int(dim), int(n), float(L))
    count = n**dim
    off = _HEADER.size
    q = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(grid.shape).copy()
    off += count * 8
    u = (
        np.frombuffer(blob, dtype="<f8", count=dim * count, offset=off)
        .reshape((dim,) + grid.shape)
        .copy()
    )
    return grid, State(t=float(t), q=q, u=u)


def snapshot_csv(grid: Grid, state: State) -> str:
    """1D snapshots as x, q, u columns."""
    if grid.dim != 1:
        raise ValueError("CSV snapshots are for 1D fields")
    (x,) = grid.meshgrid()
    lines = ["# schema=1", f"# t={state.t!r}", "x,q,u"]
    for i in range(grid.n):
        lines.append(f"{x[i]!r},{state.q[i]!r},{state.u[0][i]!r}")
    return "\n".join(lines) + "\n"


def write_trajectory(outdir: str, traj: Trajectory, basename: str = "snapshot") -> list:
    """All samples as binary snapshots (and CSVs in 1D); returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for i in range(traj.n_samples):
        st = traj.state(i)
        p = os.path.join(outdir, f"{basename}_{i:05d}.bin")
        write_snapshot(p, traj.grid, st)
        paths.append(p)
        if traj.grid.dim == 1:
            atomic_write_text(
                os.path.join(outdir, f"{basename}_{i:05d}.csv"),
                snapshot_csv(traj.grid, st),
            )
    return paths


# ---------------------------------------------------------------------------
# reports


def report_csv(report) -> str:
    lines = ["# schema=1", "param,error,norm_flavor,s,beta,status"]
    for row in report.rows():
        lines.append(
            f"{row['param']!r},{row['error']!r},{row['norm_flavor']},"
            f"{row['s']!r},{row['beta']!r},{row['status']}"
        )
    return "\n".join(lines) + "\n"


def write_report(outdir: str, report, name: str = "sweep") -> dict:
    """Report CSV plus JSON summary; returns the file map."""
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{name}.csv")
    atomic_write_text(csv_path, report_csv(report))
    summary = {
        "family": report.family,
        "h": report.h,
        "s": report.s,
        "norm_flavor": report.norm_flavor,
        "param_values": report.param_values,
        "errors": report.errors,
        "point_status": report.point_status,
        "slope": report.slope,
        "intercept": report.intercept,
        "r2": report.r2,
        "monotone": report.monotone,
        "passed": report.passed,
        "verdict": report.verdict,
        "extrapolation": report.extrapolation,
        "manifest": report.manifest,
    }
    json_path = os.path.join(outdir, f"{name}.json")
    atomic_write_text(json_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return {"csv": csv_path, "json": json_path}


def write_manifest(outdir: str, payload: dict, name: str = "manifest") -> str:
    os.makedirs(outdir, exist_ok=True)
    payload = dict(payload)
    payload.setdefault("build", build_id())
    payload.setdefault("package_version", capns.__version__)
    path = os.path.join(outdir, f"{name}.json")
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def output_root(cli_value: str | None = None) -> str:
    """Output directory resolution: CLI flag > CAPNS_OUTPUT_ROOT > cwd."""
    if cli_value:
        return cli_value
    return os.environ.get("CAPNS_OUTPUT_ROOT", os.getcwd())
