"""Embedding CSV files: header ``x_0,...,x_{p-1},y,d``, optionally gzipped.

Files ending in ``.gz`` (or starting with the gzip magic bytes) are read
and written compressed.  Floats are written with ``repr`` so that values
survive a round trip bit for bit.
"""
from __future__ import annotations

import csv
import gzip
import io
from pathlib import Path

import numpy as np

from .dataset import GROUPS, Dataset
from .errors import WgeLabError


class MalformedFile(WgeLabError, ValueError):
    pass


def _open_text(path, mode="r"):
    path = Path(path)
    if "r" in mode:
        with open(path, "rb") as fh:
            gz = fh.read(2) == b"\x1f\x8b"
    else:
        gz = path.suffix == ".gz"
    if gz:
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="utf-8", newline="")
    return open(path, mode, encoding="utf-8", newline="")


def _parse_header(header, path):
    if header is None:
        raise MalformedFile(f"{path}: file is empty")
    header = [h.strip() for h in header]
    if len(header) < 3 or header[-2:] != ["y", "d"]:
        raise MalformedFile(f"{path}: header must end with 'y,d'")
    p = len(header) - 2
    if header[:p] != [f"x_{j}" for j in range(p)]:
        raise MalformedFile(f"{path}: feature columns must be named x_0..x_{p - 1}")
    return p


def _iter_rows(path):
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        p = _parse_header(next(reader, None), path)
        yield p
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 2:
                raise MalformedFile(f"{path}:{lineno}: expected {p + 2} fields, got {len(row)}")
            try:
                x = [float(v) for v in row[:p]]
                y = int(row[p])
            except ValueError as exc:
                raise MalformedFile(f"{path}:{lineno}: {exc}") from None
            d = row[p + 1].strip()
            if y not in (0, 1) or d not in ("S", "T"):
                raise MalformedFile(f"{path}:{lineno}: labels must be y in {{0,1}}, d in {{S,T}}")
            if not all(np.isfinite(x)):
                raise MalformedFile(f"{path}:{lineno}: non-finite feature")
            yield x, y, d


def scan_group_counts(path) -> dict:
    """One streaming pass returning the per-group sample counts."""
    rows = _iter_rows(path)
    next(rows)
    counts = dict.fromkeys(GROUPS, 0)
    for _, y, d in rows:
        counts[GROUPS[2 * y + (d == "S")]] += 1
    return counts


def read_embeddings(path, require_all_groups=True) -> Dataset:
    rows = _iter_rows(path)
    p = next(rows)
    xs, ys, ds = [], [], []
    for x, y, d in rows:
        xs.append(x)
        ys.append(y)
        ds.append(d)
    if not xs:
        raise MalformedFile(f"{path}: no data rows")
    data = Dataset(np.array(xs, dtype=float).reshape(-1, p), ys, ds)
    if require_all_groups:
        data.require_groups()
    return data


def write_embeddings(ds: Dataset, path):
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x_{j}" for j in range(ds.dim)] + ["y", "d"])
        for xi, yi, di in zip(ds.x, ds.y, ds.d):
            writer.writerow([repr(float(v)) for v in xi] + [int(yi), di])
