#!/usr/bin/env python3
"""Re-solve exported design models with GLPK and compare with the built-in solve.

usage: second_backend.py UFLS_BINARY DATA_DIR
Exits 77 (skipped) when GLPK is not available through cvxopt.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

try:
    from cvxopt import glpk, matrix, spmatrix
except ImportError:
    sys.exit(77)


def read_mps(path):
    rows, sense, obj_row = {}, [], None
    cols, cost, entries = {}, [], []
    rhs, bounds, integer = {}, {}, set()
    section, in_int = None, False
    for raw in Path(path).read_text().splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "ROWS":
            if f[0] == "N":
                obj_row = f[1]
            else:
                rows[f[1]] = len(sense)
                sense.append(f[0])
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            name = f[0]
            if name not in cols:
                cols[name] = len(cost)
                cost.append(0.0)
            j = cols[name]
            if in_int:
                integer.add(j)
            for r, v in zip(f[1::2], f[2::2]):
                if r == obj_row:
                    cost[j] += float(v)
                else:
                    entries.append((rows[r], j, float(v)))
        elif section == "RHS":
            for r, v in zip(f[1::2], f[2::2]) if len(f) % 2 == 1 else zip(f[0::2], f[1::2]):
                if r != obj_row:
                    rhs[rows[r]] = float(v)
        elif section == "BOUNDS":
            kind, name = f[0], f[2]
            j = cols[name]
            lo, hi = bounds.get(j, (0.0, None))
            val = float(f[3]) if len(f) > 3 else None
            if kind == "UP":
                hi = val
            elif kind == "LO":
                lo = val
            elif kind == "FX":
                lo = hi = val
            elif kind == "FR":
                lo, hi = None, None
            elif kind == "MI":
                lo = None
            elif kind == "PL":
                hi = None
            elif kind == "BV":
                lo, hi = 0.0, 1.0
                integer.add(j)
            bounds[j] = (lo, hi)
    return sense, cost, entries, rhs, bounds, integer, len(cols)


def solve_glpk(path):
    sense, cost, entries, rhs, bounds, integer, n = read_mps(path)
    g_i, g_j, g_v, h = [], [], [], []
    a_i, a_j, a_v, b = [], [], [], []
    by_row = {}
    for r, j, v in entries:
        by_row.setdefault(r, []).append((j, v))
    for r, s in enumerate(sense):
        terms = by_row.get(r, [])
        rv = rhs.get(r, 0.0)
        if s == "E":
            k = len(b)
            for j, v in terms:
                a_i.append(k), a_j.append(j), a_v.append(v)
            b.append(rv)
        else:
            sign = 1.0 if s == "L" else -1.0
            k = len(h)
            for j, v in terms:
                g_i.append(k), g_j.append(j), g_v.append(sign * v)
            h.append(sign * rv)
    for j in range(n):
        lo, hi = bounds.get(j, (0.0, None))
        if lo is not None and hi is not None and lo == hi:
            k = len(b)
            a_i.append(k), a_j.append(j), a_v.append(1.0)
            b.append(lo)
            continue
        if hi is not None:
            k = len(h)
            g_i.append(k), g_j.append(j), g_v.append(1.0)
            h.append(hi)
        if lo is not None:
            k = len(h)
            g_i.append(k), g_j.append(j), g_v.append(-1.0)
            h.append(-lo)
    G = spmatrix(g_v, g_i, g_j, (len(h), n))
    A = spmatrix(a_v, a_i, a_j, (len(b), n))
    glpk.options["msg_lev"] = "GLP_MSG_OFF"
    glpk.options["mip_gap"] = 0.0
    status, x = glpk.ilp(matrix(cost), G, matrix(h), A, matrix(b), set(), set(integer))
    if status != "optimal":
        raise RuntimeError(f"GLPK status {status}")
    return sum(c * x[j] for j, c in enumerate(cost))


def main():
    ufls, data = sys.argv[1], Path(sys.argv[2])
    instances = [
        ["--case", str(data / "cases/ring3.json"), "--set", "milp.n_stages=1", "--set", "milp.horizon_s=4"],
        ["--case", str(data / "cases/ring3.json"), "--set", "milp.n_stages=2", "--set", "milp.horizon_s=3",
         "--set", "milp.gammas=[1,0.5,1]"],
        ["--case", str(data / "cases/wecc9.json"), "--set", "milp.n_stages=1", "--set", "milp.horizon_s=2.5",
         "--set", "scenarios.target=0.23"],
    ]
    common = ["--set", "scenarios.count=1", "--set", "milp.stage_cap_frac=0.5",
              "--set", "solver.rel_gap=0", "--set", "solver.abs_gap=0"]
    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for n, inst in enumerate(instances):
            out = Path(tmp) / str(n)
            model = out / "model.mps"
            subprocess.run([ufls, "export-model", *inst, *common, "-o", str(out), "--output", str(model)],
                           check=True, capture_output=True)
            subprocess.run([ufls, "optimize", *inst, *common, "-o", str(out)], check=True, capture_output=True)
            first = json.loads((out / "solution.json").read_text())["objective"]
            second = solve_glpk(model)
            ok = abs(first - second) <= 1e-6
            failed += not ok
            print(f"{'PASS' if ok else 'FAIL'} instance {n}: highs {first:.9f} glpk {second:.9f}")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
