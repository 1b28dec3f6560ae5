"""Plain-data persistence: snapshot series, POD bases, CSV/JSON tables.

All text output uses shortest round-trip float formatting, so CSV files
reproduce the binary64 values bit for bit when parsed back.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .nls import PodBasis, SnapshotSeries, spectral_derivative


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(x))


def write_json(path, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_invariants_csv(path, times, series: dict):
    """One row per observation: time plus each declared quantity."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(series)
    with open(path, "w") as fh:
        fh.write(",".join(["time", *names]) + "\n")
        for i, t in enumerate(times):
            row = [format_float(t)] + [format_float(series[n][i]) for n in names]
            fh.write(",".join(row) + "\n")


def read_invariants_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [list(map(float, line.strip().split(","))) for line in fh if line.strip()]
    data = np.asarray(rows)
    return {name: data[:, j] for j, name in enumerate(header)}


def write_histogram_csv(path, edges, density):
    """Bin edges and densities; densities integrate to one."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("bin_left,bin_right,density\n")
        for lo, hi, d in zip(edges[:-1], edges[1:], density):
            fh.write(f"{format_float(lo)},{format_float(hi)},{format_float(d)}\n")


def write_field_csv(path, x, fields: dict):
    """Grid field snapshot: one row per cell, named columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(fields)
    with open(path, "w") as fh:
        fh.write(",".join(["x", *names]) + "\n")
        for i, xi in enumerate(x):
            row = [format_float(xi)] + [format_float(fields[n][i]) for n in names]
            fh.write(",".join(row) + "\n")


# ---------------------------------------------------------------------------
# Snapshot series containers (complex fields)


def save_snapshots(path, series: SnapshotSeries, fmt: str | None = None):
    """Persist a snapshot series; format from ``fmt`` or the file suffix.

    ``csv`` and ``json`` are self-describing text containers with the domain
    length recorded; ``npz`` is the compact binary option.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".") or "csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "npz":
        np.savez(path, times=series.times, snapshots=series.snapshots,
                 length=series.length)
    elif fmt == "json":
        write_json(path, {
            "kind": "snapshot-series",
            "length": series.length,
            "times": [format_float(t) for t in series.times],
            "real": [[format_float(v) for v in row] for row in series.snapshots.real],
            "imag": [[format_float(v) for v in row] for row in series.snapshots.imag],
        })
    elif fmt == "csv":
        n = series.snapshots.shape[1]
        with open(path, "w") as fh:
            fh.write("# snapshot-series\n")
            fh.write(f"# length={format_float(series.length)}\n")
            fh.write(f"# n_grid={n}\n")
            cols = ["time"]
            for j in range(n):
                cols += [f"re_{j}", f"im_{j}"]
            fh.write(",".join(cols) + "\n")
            for t, row in zip(series.times, series.snapshots):
                vals = [format_float(t)]
                for v in row:
                    vals += [format_float(v.real), format_float(v.imag)]
                fh.write(",".join(vals) + "\n")
    else:
        raise ValidationError(f"unknown snapshot format {fmt!r}")


def load_snapshots(path) -> SnapshotSeries:
    path = Path(path)
    if path.suffix == ".npz":
        data = np.load(path)
        return SnapshotSeries(data["times"], data["snapshots"], float(data["length"]))
    if path.suffix == ".json":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("kind") != "snapshot-series":
            raise ValidationError(f"{path} is not a snapshot series")
        real = np.asarray(payload["real"], dtype=float)
        imag = np.asarray(payload["imag"], dtype=float)
        times = np.asarray([float(t) for t in payload["times"]])
        return SnapshotSeries(times, real + 1j * imag, float(payload["length"]))
    # CSV
    length = None
    times, rows = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "length=" in line:
                    length = float(line.split("length=")[1])
                continue
            if line.startswith("time"):
                continue
            vals = list(map(float, line.split(",")))
            times.append(vals[0])
            interleaved = np.asarray(vals[1:])
            rows.append(interleaved[0::2] + 1j * interleaved[1::2])
    if length is None:
        raise ValidationError(f"{path} has no length metadata")
    return SnapshotSeries(np.asarray(times), np.stack(rows), length)


# ---------------------------------------------------------------------------
# POD bases


def save_pod_basis(path, basis: PodBasis):
    """Persist mean, modes, and singular values (derivatives are recomputed)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".npz":
        np.savez(path, mean=basis.mean, modes=basis.modes,
                 singular_values=basis.singular_values, length=basis.length)
        return
    write_json(path, {
        "kind": "pod-basis",
        "length": basis.length,
        "singular_values": [format_float(s) for s in basis.singular_values],
        "mean_real": [format_float(v) for v in basis.mean.real],
        "mean_imag": [format_float(v) for v in basis.mean.imag],
        "modes_real": [[format_float(v) for v in row] for row in basis.modes.real],
        "modes_imag": [[format_float(v) for v in row] for row in basis.modes.imag],
    })


def load_pod_basis(path) -> PodBasis:
    path = Path(path)
    if path.suffix == ".npz":
        data = np.load(path)
        mean = data["mean"]
        modes = data["modes"]
        length = float(data["length"])
        sv = data["singular_values"]
    else:
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("kind") != "pod-basis":
            raise ValidationError(f"{path} is not a POD basis")
        length = float(payload["length"])
        mean = np.asarray(payload["mean_real"], dtype=float) + 1j * np.asarray(
            payload["mean_imag"], dtype=float
        )
        modes = np.asarray(payload["modes_real"], dtype=float) + 1j * np.asarray(
            payload["modes_imag"], dtype=float
        )
        sv = np.asarray([float(s) for s in payload["singular_values"]])
    return PodBasis(
        mean=mean,
        modes=modes,
        mode_derivatives=np.stack([spectral_derivative(m, length) for m in modes]),
        mean_derivative=spectral_derivative(mean, length),
        length=length,
        singular_values=np.asarray(sv),
    )
