"""Compare the two field simulators on a shared set of spatial points.

The direct route factors the increment covariance and draws correlated
Gaussians; the sheet route integrates white noise on a truncated
half-plane strip.  Their increment laws must agree, so the script prints
mean and covariance z-scores between independent runs of each.
"""

import argparse
from functools import partial

import numpy as np

from heatlocal.heat_model import path_increment_replicate, sheet_increment_replicate
from heatlocal.mc import run_replicates

POINTS = (0.6, 0.9, 1.2, 1.5, 1.8, 2.0)


def cov_and_se(raw: np.ndarray):
    n = raw.shape[0]
    centered = raw - raw.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    se = np.empty_like(cov)
    for i in range(cov.shape[0]):
        se[i] = np.std(centered[:, i, None] * centered, axis=0, ddof=1) / np.sqrt(n)
    return cov, se


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--path-reps", type=int, default=200_000)
    ap.add_argument("--sheet-reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    interval = (0.0, 2.0)
    res_path = run_replicates(
        partial(path_increment_replicate, points=POINTS, interval=interval),
        replicates=args.path_reps,
        master_seed=args.seed,
        jobs=args.jobs,
        return_raw=True,
    )
    res_sheet = run_replicates(
        partial(sheet_increment_replicate, points=POINTS, interval=interval),
        replicates=args.sheet_reps,
        master_seed=args.seed + 1,
        jobs=args.jobs,
        return_raw=True,
    )

    mean_z = np.abs(res_path.mean - res_sheet.mean) / np.sqrt(
        res_path.stderr**2 + res_sheet.stderr**2
    )
    cov_p, se_p = cov_and_se(res_path.raw)
    cov_s, se_s = cov_and_se(res_sheet.raw)
    cov_z = np.abs(cov_p - cov_s) / np.sqrt(se_p**2 + se_s**2)

    print(f"direct route: {res_path.n} replicates, sheet route: {res_sheet.n}")
    print("\nincrement means (direct / sheet / z):")
    for j, u in enumerate(POINTS):
        print(
            f"  u={u:<4} {res_path.mean[j]:+.5f} / {res_sheet.mean[j]:+.5f}"
            f" / {mean_z[j]:.2f}"
        )
    iu = np.triu_indices(len(POINTS))
    print(f"\nworst mean z:       {mean_z.max():.3f}")
    print(f"worst covariance z: {cov_z[iu].max():.3f}  (upper triangle)")
    print("agreement" if max(mean_z.max(), cov_z[iu].max()) <= 4.0 else "DISAGREEMENT")


if __name__ == "__main__":
    main()
