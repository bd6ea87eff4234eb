#!/usr/bin/env python3
"""Scan the four scattering channels against probe detuning.

Writes two CSV files into results/: one varying the coupling strength at
fixed side leakage, one varying the leakage at strong coupling.  Plot
|R|, |T|, |S|, |N| and prob_sum per (g, kappa_s) group against delta.
"""

import pathlib
import sys

from qdrepeater.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"


def run():
    OUT.mkdir(exist_ok=True)
    jobs = {
        "coefficients_vs_coupling.csv": ["--g-grid", "0,0.6,1.2,2.4", "--kappa-s-grid", "0.1"],
        "coefficients_vs_leakage.csv": ["--g-grid", "2.4", "--kappa-s-grid", "0,0.05,0.15,0.2"],
    }
    for name, grid in jobs.items():
        target = OUT / name
        code = main(["sweep", "--quantity", "coeffs", *grid,
                     "--delta-grid=-5:5:101", "--output", str(target)])
        if code != 0:
            return code
        print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
