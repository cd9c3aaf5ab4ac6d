"""Finite samples of (x, y, d) triples with per-group bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import EmptyGroup


class GroupKey(NamedTuple):
    y: int
    d: str

    def __str__(self):
        return f"({self.y},{self.d})"


# Order fixes the integer group code: 2*y + (d == "S").
GROUPS = (GroupKey(0, "T"), GroupKey(0, "S"), GroupKey(1, "T"), GroupKey(1, "S"))
DOMAINS = ("S", "T")


class LabeledSample(NamedTuple):
    x: np.ndarray
    y: int
    d: str


@dataclass(frozen=True, eq=False)
class Dataset:
    """Arrays ``x`` (n, p), ``y`` (n,) and ``d`` (n,) of ``"S"``/``"T"``.

    ``y`` is stored as float so regression-style targets can be used with
    ``check_labels=False``; group bookkeeping only ever looks at y in {0, 1}.
    """

    x: np.ndarray
    y: np.ndarray
    d: np.ndarray
    check_labels: bool = field(default=True, repr=False)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        d = np.asarray(self.d).astype("<U1").reshape(-1)
        if not (x.shape[0] == y.shape[0] == d.shape[0]):
            raise ValueError(f"length mismatch: x {x.shape}, y {y.shape}, d {d.shape}")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("dataset contains non-finite values")
        if self.check_labels and not np.all((y == 0) | (y == 1)):
            raise ValueError("class labels must be 0 or 1")
        if not np.all((d == "S") | (d == "T")):
            raise ValueError("domain labels must be 'S' or 'T'")
        for arr in (x, y, d):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def __len__(self):
        return self.n

    @cached_property
    def group_code(self) -> np.ndarray:
        code = 2 * self.y.astype(np.int64) + (self.d == "S")
        code[(self.y != 0) & (self.y != 1)] = -1
        return code

    @cached_property
    def group_counts(self) -> dict:
        counts = np.bincount(self.group_code[self.group_code >= 0], minlength=4)
        return {g: int(c) for g, c in zip(GROUPS, counts)}

    @property
    def n_min(self) -> int:
        return min(self.group_counts.values())

    def group_indices(self, g) -> np.ndarray:
        return np.flatnonzero(self.group_code == GROUPS.index(GroupKey(*g)))

    def require_groups(self, groups=GROUPS):
        """Raise EmptyGroup unless every group in ``groups`` has a sample."""
        counts = self.group_counts
        missing = [str(g) for g in groups if counts[GroupKey(*g)] == 0]
        if missing:
            raise EmptyGroup(f"empty group(s): {', '.join(missing)}", counts)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx], self.d[idx], self.check_labels)

    def concat(self, other) -> "Dataset":
        return Dataset(np.vstack([self.x, other.x]), np.concatenate([self.y, other.y]),
                       np.concatenate([self.d, other.d]), self.check_labels)

    def samples(self):
        for xi, yi, di in zip(self.x, self.y, self.d):
            yield LabeledSample(xi, int(yi) if self.check_labels else yi, str(di))


def format_group_counts(counts) -> str:
    return "  ".join(f"n{g}={counts[g]}" for g in GROUPS)
