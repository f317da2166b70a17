#!/usr/bin/env python3
"""Cross-validated RMSE of unconstrained vs shape-constrained wage regressions.

Needs the 1988 CPS wage table (ex1029 in the R package Sleuth2), exported as CSV:

    Rscript -e 'write.csv(Sleuth2::ex1029, "ex1029.csv", row.names=FALSE)'
    python3 scripts/wage_fit.py --data ex1029.csv --soskit build/soskit

The constrained model is increasing in education and concave (fitted as -wage
with a convex model). Concavity is imposed jointly, not in experience alone.
"""
import argparse
import json
import subprocess
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import sympy


def fit(soskit, X, y, degree, constrained, workdir, tol):
    data = workdir / "train.csv"
    sign = -1.0 if constrained else 1.0
    np.savetxt(data, np.column_stack([X, sign * y]), delimiter=",")
    problem = {"schema_version": 1, "kind": "fit", "data": str(data), "degree": degree}
    if constrained:
        problem.update(monotone=[0, -1], convex=True)  # -wage decreasing in education
    path = workdir / "fit.json"
    path.write_text(json.dumps(problem))
    out = subprocess.run([soskit, "fit", "--in", str(path), "--tol", str(tol)], capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    result = json.loads(out.stdout)["result"]
    syms = sympy.symbols(result["variables"])
    f = sympy.lambdify(syms, sign * sympy.sympify(result["f"].replace("^", "**")), "numpy")
    return lambda Z: np.broadcast_to(f(*Z.T), (len(Z),))


def rmse(f, X, y):
    return float(np.sqrt(np.mean((f(X) - y) ** 2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", required=True, help="CSV with experience, education and wage columns")
    ap.add_argument("--soskit", default="build/soskit")
    ap.add_argument("--experience", default="Exper")
    ap.add_argument("--education", default="Educ")
    ap.add_argument("--wage", default="WeeklyEarnings")
    ap.add_argument("--degrees", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--folds", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-6, help="solver tolerance (shape is re-checked on a grid)")
    ap.add_argument("--plot", help="write the RMSE figure to this path")
    args = ap.parse_args()

    df = pd.read_csv(args.data)
    X = df[[args.experience, args.education]].to_numpy(float)
    y = df[args.wage].to_numpy(float)
    # Rescale inputs to [0, 1] so the fitting box and monomials are well conditioned.
    X = (X - X.min(0)) / np.ptp(X, axis=0)
    # Standardizing the response keeps the solver well scaled; shape is unaffected.
    mu, sd = y.mean(), y.std()
    y = (y - mu) / sd
    folds = np.array_split(np.random.default_rng(args.seed).permutation(len(y)), args.folds)

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for degree in args.degrees:
            for constrained in (False, True):
                train, test = [], []
                for k, idx in enumerate(folds):
                    mask = np.ones(len(y), bool)
                    mask[idx] = False
                    f = fit(args.soskit, X[mask], y[mask], degree, constrained, Path(tmp), args.tol)
                    train.append(sd * rmse(f, X[mask], y[mask]))
                    test.append(sd * rmse(f, X[~mask], y[~mask]))
                rows.append((degree, "Hybrid" if constrained else "UPR", np.mean(train), np.mean(test)))
                print(f"degree {degree} {rows[-1][1]:6s} train {rows[-1][2]:.2f} test {rows[-1][3]:.2f}", flush=True)

    if args.plot:
        import matplotlib.pyplot as plt

        table = pd.DataFrame(rows, columns=["degree", "method", "train", "test"])
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for ax, col in zip(axes, ["train", "test"]):
            for method, g in table.groupby("method"):
                ax.plot(g["degree"], g[col], marker="o", label=method)
            ax.set_xlabel("degree")
            ax.set_ylabel(f"RMSE ({col})")
            ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot)


if __name__ == "__main__":
    main()
