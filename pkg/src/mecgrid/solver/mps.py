"""Fixed-format MPS export/import of a ``MilpProblem``.

Row and column names are replaced by 8-character codes (``R0000001``,
``C0000001``); the original names are listed in ``*`` comment lines.  The
objective constant is written as the negated RHS of the objective row, the
convention used by most solvers.  Binary columns sit inside INTORG/INTEND
markers with explicit 0/1 bounds.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import IO, Union

from ..milp import MilpProblem

OBJ = "COST"


def _num(v: float) -> str:
    s = repr(float(v))
    if len(s) <= 12:
        return s
    for digits in range(12, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot format {v!r} in 12 characters")


def _line(f1="", f2="", f3="", f4="", f5="", f6="") -> str:
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def write_mps(problem: MilpProblem, dest: Union[str, Path, IO[str]]) -> None:
    rname = [f"R{i + 1:07d}" for i in range(problem.n_rows)]
    cname = [f"C{j + 1:07d}" for j in range(problem.n_vars)]
    out = [f"* {problem.n_rows} rows, {problem.n_vars} columns"]
    out += [f"* {cname[j]} {n}" for j, n in enumerate(problem.names)]
    out += [f"* {rname[i]} {r.name or r.tag}" for i, r in enumerate(problem.rows)]
    out.append(f"NAME          {(problem.name or 'MECGRID')[:8]}")
    out.append("ROWS")
    out.append(_line("N", OBJ))
    kind = {"<=": "L", ">=": "G", "==": "E"}
    for i, r in enumerate(problem.rows):
        out.append(_line(kind[r.sense], rname[i]))
    out.append("COLUMNS")
    cols: list[list[tuple[str, float]]] = [[] for _ in range(problem.n_vars)]
    for j, cj in enumerate(problem.obj):
        if cj != 0.0:
            cols[j].append((OBJ, cj))
    for i, r in enumerate(problem.rows):
        for j, a in zip(r.cols.tolist(), r.vals.tolist()):
            cols[j].append((rname[i], a))
    in_int = False
    marker = 0
    for j, entries in enumerate(cols):
        is_bin = problem.kinds[j] == "binary"
        if is_bin != in_int:
            tag = "'INTORG'" if is_bin else "'INTEND'"
            out.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", tag))
            marker += 1
            in_int = is_bin
        if not entries:
            # keep the column declared
            entries = [(OBJ, 0.0)]
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", cname[j], pair[0][0], _num(pair[0][1]),
                                 pair[1][0], _num(pair[1][1])))
            else:
                out.append(_line("", cname[j], pair[0][0], _num(pair[0][1])))
    if in_int:
        out.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    if problem.obj_constant != 0.0:
        out.append(_line("", "RHS", OBJ, _num(-problem.obj_constant)))
    for i, r in enumerate(problem.rows):
        if r.rhs != 0.0:
            out.append(_line("", "RHS", rname[i], _num(r.rhs)))
    out.append("BOUNDS")
    for j in range(problem.n_vars):
        lb, ub = problem.lb[j], problem.ub[j]
        c = cname[j]
        if problem.kinds[j] == "binary":
            out.append(_line("LO", "BND", c, _num(lb)))
            out.append(_line("UP", "BND", c, _num(ub)))
        elif lb == ub:
            out.append(_line("FX", "BND", c, _num(lb)))
        elif lb == -math.inf and ub == math.inf:
            out.append(_line("FR", "BND", c))
        else:
            if lb == -math.inf:
                out.append(_line("MI", "BND", c))
            elif lb != 0.0:
                out.append(_line("LO", "BND", c, _num(lb)))
            if ub != math.inf:
                out.append(_line("UP", "BND", c, _num(ub)))
    out.append("ENDATA")
    text = "\n".join(out) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def read_mps(src: Union[str, Path, IO[str]]) -> MilpProblem:
    """Parse a fixed-format MPS file whose names contain no blanks."""
    text = src.read() if hasattr(src, "read") else Path(src).read_text(encoding="utf-8")
    prob = MilpProblem()
    section = None
    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    row_coefs: dict[str, dict[int, float]] = {}
    rhs: dict[str, float] = {}
    col_id: dict[str, int] = {}
    integer = False
    sense_of = {"L": "<=", "G": ">=", "E": "=="}
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            head = raw.split()
            section = head[0]
            if section == "NAME" and len(head) > 1:
                prob.name = head[1]
            continue
        tok = raw.split()
        if section == "ROWS":
            if tok[0] == "N":
                if obj_row is None:
                    obj_row = tok[1]
            else:
                row_sense[tok[1]] = sense_of[tok[0]]
                row_order.append(tok[1])
                row_coefs[tok[1]] = {}
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                integer = tok[2] == "'INTORG'"
                continue
            name = tok[0]
            if name not in col_id:
                col_id[name] = prob.add_var(name, 0.0, math.inf,
                                            "binary" if integer else "continuous")
                if integer:
                    prob.ub[col_id[name]] = math.inf
            j = col_id[name]
            for k in range(1, len(tok) - 1, 2):
                r, v = tok[k], float(tok[k + 1])
                if r == obj_row:
                    prob.obj[j] += v
                elif r in row_coefs:
                    row_coefs[r][j] = row_coefs[r].get(j, 0.0) + v
        elif section == "RHS":
            for k in range(1, len(tok) - 1, 2):
                rhs[tok[k]] = float(tok[k + 1])
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            j = col_id[col]
            val = float(tok[3]) if len(tok) > 3 else 0.0
            if kind == "LO":
                prob.lb[j] = val
            elif kind == "UP":
                prob.ub[j] = val
            elif kind == "FX":
                prob.lb[j] = prob.ub[j] = val
            elif kind == "FR":
                prob.lb[j], prob.ub[j] = -math.inf, math.inf
            elif kind == "MI":
                prob.lb[j] = -math.inf
            elif kind == "PL":
                prob.ub[j] = math.inf
            elif kind == "BV":
                prob.lb[j], prob.ub[j] = 0.0, 1.0
                prob.kinds[j] = "binary"
    for r in row_order:
        prob.add_constraint(row_coefs[r], row_sense[r], rhs.get(r, 0.0), name=r)
    if obj_row in rhs:
        prob.obj_constant = -rhs[obj_row]
    return prob
