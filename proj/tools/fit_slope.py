#!/usr/bin/env python3
"""Least-squares slope of log gamma_l against log l from a spectrum CSV.

usage: fit_slope.py spectrum.csv [l_min] [l_max]
"""
import sys

import numpy as np


def main():
    path = sys.argv[1]
    lo = int(sys.argv[2]) if len(sys.argv) > 2 else 8
    hi = int(sys.argv[3]) if len(sys.argv) > 3 else 32
    data = np.genfromtxt(path, delimiter=",", names=True)
    sel = (data["l"] >= lo) & (data["l"] <= hi)
    slope, _ = np.polyfit(np.log(data["l"][sel]), np.log(data["gamma_l"][sel]), 1)
    print(f"{slope:.4f}")


if __name__ == "__main__":
    main()
