"""Split the rds-convergence stability ratio into its path and area parts.

For each delta this prints the mean path term and area term of rho_beta, the
mean Holder distance of the solutions, both ratios and the sup-norm distance.
It is the diagnostic behind the Kendall tau result of rds-convergence.

    python3 scripts/rds_ratio_breakdown.py [--config FILE] [--samples N] [--mesh-exponent K]
"""

import argparse
import dataclasses

import numpy as np

from roughcocycle.experiments import _layout, _sample, _solve_rk4_batch, _solve_rough_batch, load_config
from roughcocycle.grid_path import VectorPath, holder_seminorm
from roughcocycle.rde import get_field
from roughcocycle.rough_core import AreaField, RoughPathLift, cumulative_from_cells, metric_terms
from roughcocycle.smoothing import slopes, smooth_lift_values


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/rds_convergence.cfg")
    ap.add_argument("--samples", type=int, default=40)
    ap.add_argument("--mesh-exponent", type=int)
    args = ap.parse_args()
    cfg = load_config(args.config)
    if args.mesh_exponent:
        cfg = dataclasses.replace(cfg, mesh_exponent=args.mesh_exponent)
    n = args.samples
    field = get_field(cfg.field)
    lay = _layout(cfg, max(cfg.deltas))
    i0, i1 = lay.window
    sub = lay.grid.sub(i0, i1)
    W = np.stack([_sample(cfg, lay, i) for i in range(n)])
    dx = np.diff(W[:, i0 : i1 + 1], axis=1)
    cells = 0.5 * dx[..., :, None] * dx[..., None, :]
    xi = np.array(cfg.xi)
    Y = _solve_rough_batch(field, dx, cells, xi)
    print("delta,path_term,area_term,sol_dist,sol_over_path,sol_over_metric,sup_dist")
    for d in cfg.deltas:
        k = round(d * lay.cells_per_unit)
        Yd = _solve_rk4_batch(field, slopes(W, k, d, i0, i1), lay.mesh, xi)
        rec = []
        for i in range(n):
            wd, Ad = smooth_lift_values(W[i], k, d, lay.mesh, i0, i1, lay.grid.zero_index)
            x = W[i, i0 : i1 + 1]
            ref = RoughPathLift(VectorPath(sub, x), AreaField(sub, cumulative_from_cells(x, cells[i])))
            _, p, a = metric_terms(RoughPathLift(VectorPath(sub, wd), AreaField(sub, Ad)), ref, cfg.beta)
            s = holder_seminorm(VectorPath(sub, Yd[i] - Y[i]), cfg.beta)
            rec.append((p, a, s, s / p, s / (p + a), np.max(np.abs(Yd[i] - Y[i]))))
        m = np.mean(rec, axis=0)
        print(f"{d!r}," + ",".join(f"{v:.6g}" for v in m))


if __name__ == "__main__":
    main()
