#!/usr/bin/env python3
"""Writes fixtures/analysis/ttest_oracle.json from scipy.stats."""

import json
import os

import numpy as np
from scipy import stats

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "analysis", "ttest_oracle.json")


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    for i in range(20):
        na = int(rng.integers(2, 32))
        nb = int(rng.integers(2, 32))
        a = np.round(rng.normal(rng.uniform(0, 10), rng.uniform(0.5, 3), na), 3)
        b = np.round(rng.normal(rng.uniform(0, 10), rng.uniform(0.5, 3), nb), 3)
        w = stats.ttest_ind(a, b, equal_var=False)
        case = {
            "a": a.tolist(),
            "b": b.tolist(),
            "welch": {"t": float(w.statistic), "df": float(w.df), "p": float(w.pvalue)},
        }
        # paired: b' is a noisy shifted copy of a
        pb = np.round(a + rng.normal(rng.uniform(-1, 1), rng.uniform(0.2, 2), na), 3)
        p = stats.ttest_rel(a, pb)
        case["paired_b"] = pb.tolist()
        case["paired"] = {"t": float(p.statistic), "df": float(p.df), "p": float(p.pvalue)}
        cases.append(case)
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as f:
        json.dump({"generator": "scipy " + __import__("scipy").__version__, "cases": cases}, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
