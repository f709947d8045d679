"""Generic sparse MILP container shared by the model builder and the solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

SENSES = ("<=", ">=", "==")
Key = tuple  # (element, quantity, hour[, segment])


class VariableIndex:
    """Bijection between semantic keys and column numbers."""

    def __init__(self):
        self._col: dict[Key, int] = {}
        self._key: list[Key] = []

    def add(self, key: Key) -> int:
        if key in self._col:
            raise KeyError(f"duplicate variable key {key!r}")
        self._col[key] = len(self._key)
        self._key.append(key)
        return self._col[key]

    def __getitem__(self, key: Key) -> int:
        return self._col[key]

    def __contains__(self, key) -> bool:
        return key in self._col

    def __len__(self):
        return len(self._key)

    def __iter__(self):
        return iter(self._key)

    def get(self, key, default=None):
        return self._col.get(key, default)

    def key(self, col: int) -> Key:
        return self._key[col]

    def keys(self) -> list[Key]:
        return list(self._key)

    def items(self):
        return self._col.items()


@dataclass
class Row:
    cols: np.ndarray
    vals: np.ndarray
    sense: str
    rhs: float
    name: str = ""
    tag: str = ""


class MilpProblem:
    """Minimize ``c @ x + constant`` subject to sparse linear rows and boxes.

    Variables are continuous or binary.  ``tag`` on a row names the constraint
    family it belongs to, which tests and diagnostics rely on.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.names: list[str] = []
        self.kinds: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.obj_constant = 0.0
        self.rows: list[Row] = []
        self.index: VariableIndex | None = None
        self.scale: dict[str, float] = {}

    # -- construction -------------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                kind: str = "continuous", obj: float = 0.0) -> int:
        if kind not in ("continuous", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "binary":
            lb, ub = max(0.0, lb), min(1.0, ub)
        self.names.append(name)
        self.kinds.append(kind)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        return len(self.names) - 1

    def add_constraint(self, coefs: Mapping[int, float] | Iterable[tuple[int, float]],
                       sense: str, rhs: float, name: str = "", tag: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        merged: dict[int, float] = {}
        for j, a in items:
            if not 0 <= j < len(self.names):
                raise IndexError(f"constraint {name!r} references undeclared column {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        cols = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        vals = np.fromiter(merged.values(), dtype=float, count=len(merged))
        keep = vals != 0.0
        self.rows.append(Row(cols[keep], vals[keep], sense, float(rhs), name, tag))
        return len(self.rows) - 1

    def add_objective(self, j: int, coef: float):
        self.obj[j] += float(coef)

    # -- views --------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.obj, dtype=float)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.lb, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.ub, dtype=float)

    @property
    def binary_mask(self) -> np.ndarray:
        return np.asarray([k == "binary" for k in self.kinds], dtype=bool)

    def matrix(self) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((0, self.n_vars))
        indptr = np.zeros(len(self.rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(r.cols) for r in self.rows])
        indices = np.concatenate([r.cols for r in self.rows])
        data = np.concatenate([r.vals for r in self.rows])
        return sp.csr_matrix((data, indices, indptr), shape=(len(self.rows), self.n_vars))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.empty(len(self.rows))
        hi = np.empty(len(self.rows))
        for i, r in enumerate(self.rows):
            lo[i] = r.rhs if r.sense in (">=", "==") else -np.inf
            hi[i] = r.rhs if r.sense in ("<=", "==") else np.inf
        return lo, hi

    def rows_tagged(self, *tags: str) -> list[int]:
        return [i for i, r in enumerate(self.rows) if r.tag in tags]

    def objective_value(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float)) + self.obj_constant

    def max_violation(self, x) -> float:
        """Largest violation of any row or variable bound at ``x``."""
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if self.n_vars:
            viol = max(float(np.max(self.lower - x, initial=0.0)),
                       float(np.max(x - self.upper, initial=0.0)))
        if self.rows:
            act = self.matrix() @ x
            lo, hi = self.row_bounds()
            viol = max(viol, float(np.max(lo - act, initial=0.0)),
                       float(np.max(act - hi, initial=0.0)))
        return viol

    def canonical_rows(self) -> list[tuple]:
        """Row-by-row description with columns sorted (for build comparisons)."""
        out = []
        for r in self.rows:
            order = np.argsort(r.cols, kind="stable")
            out.append((r.tag, r.sense, r.rhs, tuple(r.cols[order].tolist()),
                        tuple(r.vals[order].tolist())))
        return out

    def variable_table(self) -> list[tuple]:
        return list(zip(self.names, self.kinds, self.lb, self.ub))
