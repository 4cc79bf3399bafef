"""Free-format MPS writer and reader for ``LinearProgram``.

Row names carry the family tag and key (``TRACK|T0001|S00_1|S01_1``), column
names the variable kind and key (``arrival|T0001|S00_1``), so a file read back
reconstructs the full model metadata. Two-sided rows use the RANGES section.
The objective constant is written as minus the RHS entry of the objective row.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ModelError
from .lp import LinearProgram, VarRef
from .pairing import SyncEvent

OBJ = "OBJ"


def _num(x: float) -> str:
    return repr(float(x))


def _row_kind(lo: float, hi: float) -> str:
    if math.isfinite(lo) and math.isfinite(hi):
        return "E" if lo == hi else "G"
    if math.isfinite(lo):
        return "G"
    if math.isfinite(hi):
        return "L"
    return "N"


def dumps_mps(lp: LinearProgram, name: str = "energytt") -> str:
    rows = lp.row_names()
    cols = [r.name for r in lp.var_refs]
    out = [f"NAME {name}", "OBJSENSE", "    MIN", "ROWS", f" N  {OBJ}"]
    kinds = [_row_kind(lo, hi) for lo, hi in zip(lp.row_lo, lp.row_hi)]
    if "N" in kinds:
        raise ModelError("free rows are not supported")
    out += [f" {k}  {r}" for k, r in zip(kinds, rows)]
    out.append("COLUMNS")
    csc = sp.csc_matrix(lp.A)
    csc.sort_indices()
    for j, cname in enumerate(cols):
        out.append(f"    {cname}  {OBJ}  {_num(lp.c[j])}")
        for k in range(csc.indptr[j], csc.indptr[j + 1]):
            out.append(f"    {cname}  {rows[csc.indices[k]]}  {_num(csc.data[k])}")
    out.append("RHS")
    if lp.offset != 0.0:
        out.append(f"    RHS  {OBJ}  {_num(-lp.offset)}")
    ranges = []
    for r, k, lo, hi in zip(rows, kinds, lp.row_lo, lp.row_hi):
        rhs = hi if k == "L" else lo
        if rhs != 0.0:
            out.append(f"    RHS  {r}  {_num(rhs)}")
        if k == "G" and math.isfinite(hi):
            ranges.append(f"    RNG  {r}  {_num(hi - lo)}")
    if ranges:
        out.append("RANGES")
        out += ranges
    out.append("BOUNDS")
    for cname, lb, ub in zip(cols, lp.col_lb, lp.col_ub):
        if not math.isfinite(lb) and not math.isfinite(ub):
            out.append(f" FR BND  {cname}")
            continue
        out.append(f" LO BND  {cname}  {_num(lb)}" if math.isfinite(lb) else f" MI BND  {cname}")
        if math.isfinite(ub):
            out.append(f" UP BND  {cname}  {_num(ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(lp: LinearProgram, path, name: str = "energytt") -> None:
    Path(path).write_text(dumps_mps(lp, name))


def _parse_col(name: str, index: int) -> VarRef:
    kind, *key = name.split("|")
    if kind in ("sigma", "varpi", "varphi"):
        if len(key) != 5:
            raise ModelError(f"bad overlap column name {name!r}")
        return VarRef(kind, SyncEvent(*key), index)
    return VarRef(kind, tuple(key), index)


def loads_mps(text: str) -> LinearProgram:
    section = None
    row_names, row_kind, row_pos = [], [], {}
    col_names, col_pos = [], {}
    entries_r, entries_c, entries_v = [], [], []
    cost: dict[int, float] = {}
    rhs: dict[int, float] = {}
    rng: dict[int, float] = {}
    bounds: dict[int, list] = {}
    offset = 0.0
    obj_name = None

    def col(name):
        if name not in col_pos:
            col_pos[name] = len(col_names)
            col_names.append(name)
        return col_pos[name]

    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "OBJSENSE":
            if f[0].upper() not in ("MIN", "MINIMIZE"):
                raise ModelError("only minimization is supported")
        elif section == "ROWS":
            if f[0] == "N":
                obj_name = f[1] if obj_name is None else obj_name
                continue
            row_pos[f[1]] = len(row_names)
            row_names.append(f[1])
            row_kind.append(f[0])
        elif section == "COLUMNS":
            j = col(f[0])
            for rname, val in zip(f[1::2], f[2::2]):
                if rname == obj_name:
                    cost[j] = float(val)
                else:
                    entries_r.append(row_pos[rname])
                    entries_c.append(j)
                    entries_v.append(float(val))
        elif section == "RHS":
            for rname, val in zip(f[1::2], f[2::2]):
                if rname == obj_name:
                    offset = -float(val)
                else:
                    rhs[row_pos[rname]] = float(val)
        elif section == "RANGES":
            for rname, val in zip(f[1::2], f[2::2]):
                rng[row_pos[rname]] = float(val)
        elif section == "BOUNDS":
            kind, cname = f[0], f[2]
            b = bounds.setdefault(col(cname), [0.0, math.inf])
            if kind == "LO":
                b[0] = float(f[3])
            elif kind == "UP":
                b[1] = float(f[3])
            elif kind == "FX":
                b[0] = b[1] = float(f[3])
            elif kind == "FR":
                b[0], b[1] = -math.inf, math.inf
            elif kind == "MI":
                b[0] = -math.inf
            elif kind == "PL":
                b[1] = math.inf
            else:
                raise ModelError(f"unsupported bound type {kind!r}")
        elif section not in ("NAME",):
            raise ModelError(f"unsupported MPS section {section!r}")

    m, n = len(row_names), len(col_names)
    lo, hi = np.empty(m), np.empty(m)
    for r, k in enumerate(row_kind):
        b = rhs.get(r, 0.0)
        R = rng.get(r)
        if k == "E":
            lo[r] = hi[r] = b
            if R is not None:
                lo[r], hi[r] = (b, b + R) if R > 0 else (b + R, b)
        elif k == "G":
            lo[r], hi[r] = b, (b + abs(R) if R is not None else math.inf)
        elif k == "L":
            lo[r], hi[r] = (b - abs(R) if R is not None else -math.inf), b
        else:
            raise ModelError(f"unknown row type {k!r}")
    c = np.zeros(n)
    for j, v in cost.items():
        c[j] = v
    col_lb, col_ub = np.zeros(n), np.full(n, math.inf)
    for j, (l, u) in bounds.items():
        col_lb[j], col_ub[j] = l, u
    A = sp.csr_matrix((entries_v, (entries_r, entries_c)), shape=(m, n))
    refs = [_parse_col(name, j) for j, name in enumerate(col_names)]
    fams, keys = [], []
    for name in row_names:
        fam, *key = name.split("|")
        fams.append(fam)
        keys.append(tuple(key))
    return LinearProgram(refs, c, offset, A, lo, hi, np.array(fams), keys, col_lb, col_ub,
                         index={(r.kind, r.key): r.index for r in refs})


def read_mps(path) -> LinearProgram:
    return loads_mps(Path(path).read_text())
