"""Regenerates tests/data/random_lps.json: random dense LPs solved by scipy's
HiGHS backend. The C++ suite compares its simplex against the frozen values."""
import json
import sys

import numpy as np
from scipy.optimize import linprog


def main(path):
    rng = np.random.default_rng(20240611)
    cases = []
    while len(cases) < 60:
        n = int(rng.integers(2, 31))
        m = int(rng.integers(1, 26))
        A = np.round(rng.uniform(-5, 5, size=(m, n)), 3)
        A[rng.random((m, n)) < 0.3] = 0.0
        senses = rng.choice(["le", "ge", "eq"], size=m, p=[0.5, 0.3, 0.2])
        x0 = rng.uniform(-3, 3, size=n)
        rhs = A @ x0 + np.where(senses == "le", 1, np.where(senses == "ge", -1, 0)) * rng.uniform(0, 2, size=m)
        if rng.random() < 0.15:
            rhs = rhs + rng.uniform(-20, 20, size=m)
        rhs = np.round(rhs, 3)
        c = np.round(rng.uniform(-3, 3, size=n), 3)
        lower = np.where(rng.random(n) < 0.2, -np.inf, np.round(rng.uniform(-5, -1, size=n), 3))
        upper = np.where(rng.random(n) < 0.2, np.inf, np.round(rng.uniform(1, 5, size=n), 3))
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for i in range(m):
            if senses[i] == "le":
                A_ub.append(A[i]); b_ub.append(rhs[i])
            elif senses[i] == "ge":
                A_ub.append(-A[i]); b_ub.append(-rhs[i])
            else:
                A_eq.append(A[i]); b_eq.append(rhs[i])
        res = linprog(c, A_ub=np.array(A_ub) if A_ub else None, b_ub=b_ub or None,
                      A_eq=np.array(A_eq) if A_eq else None, b_eq=b_eq or None,
                      bounds=list(zip(lower, upper)), method="highs")
        status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status)
        if status is None:
            continue
        enc = lambda v: None if not np.isfinite(v) else float(v)
        cases.append({
            "A": A.tolist(), "sense": senses.tolist(), "rhs": rhs.tolist(), "c": c.tolist(),
            "lower": [enc(v) for v in lower], "upper": [enc(v) for v in upper],
            "status": status, "objective": float(res.fun) if status == "optimal" else None,
        })
    with open(path, "w") as f:
        json.dump(cases, f)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/random_lps.json")
