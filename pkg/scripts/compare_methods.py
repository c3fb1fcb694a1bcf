"""Cross-scheme agreement grids for a battery of manifolds.

Every integrator should estimate the same path functional up to Monte
Carlo noise at moderate horizons.  Long horizons on noncompact families
(the positive-definite cone in particular) are expected to disagree:
the table is printed with an UNSTABLE flag rather than treated as an
error, matching how such runs behave in practice.
"""

import argparse

from manifold_sde import SimulationConfig, compare_methods, make_cost, make_manifold

JOBS = [
    ("so", dict(N=3), "sum_abs"),
    ("spd", dict(N=3), "spd_running"),
    ("stiefel", dict(n=5, p=3, alpha0=1.0, alpha1=1.0), "sum_abs"),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--n-path", type=int, default=1000)
    ap.add_argument("--n-divs", type=int, nargs="+", default=[200, 500, 700])
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    for family, params, cost_id in JOBS:
        handle = make_manifold(family, **params)
        cost = make_cost(cost_id, handle)
        config = SimulationConfig(T=args.T, n_div=max(args.n_divs),
                                  n_path=args.n_path, seed=args.seed,
                                  path_chunk=500)
        table = compare_methods(config, handle, cost, n_divs=args.n_divs)
        print(f"{handle.name} cost {cost_id} T={args.T:g}")
        for c in table.cells:
            print(f"  {c.integrator:>13} n_div={c.n_div:>4}: "
                  f"{c.mean:10.4f} ({c.stderr:.4f})")
        if table.consistent:
            print("  consistent within 3 combined stderrs")
        else:
            print(f"  UNSTABLE: {table.worst_pair} gap {table.worst_gap:.4g} "
                  f"> {table.worst_allowance:.4g}")


if __name__ == "__main__":
    main()
