"""Calibrate the covariance-check z scores over many master seeds.

Runs the fBm covariance config once per seed and prints, per CSV row, the
mean and standard deviation of z = (mc - formula) / se, plus the fraction of
seeds in which some row leaves the 3 SE band. An unbiased, well calibrated
estimator gives mean z near 0 and std near 1.

    python3 scripts/fbm_seed_calibration.py [--config FILE] [--seeds N] [--first SEED]
"""

import argparse
import csv
import dataclasses
import tempfile

import numpy as np

from roughcocycle.experiments import load_config, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/covariance_fbm.cfg")
    ap.add_argument("--seeds", type=int, default=40)
    ap.add_argument("--first", type=int, default=1000)
    args = ap.parse_args()
    cfg = load_config(args.config)
    z = []
    with tempfile.TemporaryDirectory() as tmp:
        for s in range(args.first, args.first + args.seeds):
            rep = run("covariance-check", dataclasses.replace(cfg, master_seed=s, out_dir=f"{tmp}/{s}"))
            with open(rep.files[0], newline="") as fh:
                rows = list(csv.DictReader(fh))
            z.append([(float(r["mc"]) - float(r["formula"])) / float(r["se"]) for r in rows])
    z = np.array(z)
    print("H,u,quantity,mean_z,std_z")
    for r, col in zip(rows, z.T):
        print(f"{r['H']},{r['u']},{r['quantity']},{col.mean():.3f},{col.std():.3f}")
    print(f"seeds with a row outside 3 SE: {np.mean(np.abs(z).max(axis=1) > 3):.3f} of {args.seeds}")


if __name__ == "__main__":
    main()
