#!/usr/bin/env python3
"""Step-size study for the Chapman day/night benchmark.

For each half-day-aligned step size: integrate 10 days with the
derivative-free inner solver, record positivity, inner-iteration cost, and
the per-day spike/rise digest.  Writes results/chapman_h<h>.csv trajectories
plus results/chapman_ladder.csv.

The default ladder shows why 337.5 s, while cheap, lets truncation ripple at
the collapsed night floor push y1 negative from day 6, and why 168.75 s is
the step the acceptance run uses.
"""

import argparse
import pathlib
import time

import numpy as np

from mosteff.chapman import chapman_problem, day_summaries, inner_config
from mosteff.rk import collocation_tableau, gauss_nodes, integrate


def run_one(h, inner):
    ode = chapman_problem()
    tab = collocation_tableau(gauss_nodes(2))
    start = time.perf_counter()
    traj = integrate(ode, tab, h, inner)
    elapsed = time.perf_counter() - start
    return traj, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", default="675,337.5,168.75,84.375", help="comma-separated h values")
    parser.add_argument("--inner", default="moser_steffensen")
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    inner = inner_config(args.inner)

    ladder_rows = []
    for h in (float(part) for part in args.steps.split(",")):
        traj, elapsed = run_one(h, inner)
        y1_min = float(traj.y[:, 0].min())
        iters = traj.inner_iterations
        positive = bool(np.all(traj.y > 0.0))
        print(
            f"h={h:g}: {elapsed:.1f}s  min(y1)={y1_min:.4e}  positive={positive}  "
            f"inner mean={sum(iters) / len(iters):.2f} max={max(iters)}  rebuilds={traj.b0_rebuilds}"
        )
        ladder_rows.append((h, elapsed, y1_min, positive, sum(iters) / len(iters), traj.b0_rebuilds))

        target = out_dir / f"chapman_h{h:g}.csv"
        with open(target, "w") as stream:
            stream.write("t,y1,y2\n")
            for t, (y1, y2) in zip(traj.t, traj.y):
                stream.write(f"{t:.17g},{y1:.17g},{y2:.17g}\n")
        for s in day_summaries(traj):
            print(
                f"   day {s.day:2d}: y2 rise {s.y2_rise:+.3e}  y1 spike {s.y1_max:.4e} "
                f"at t={s.t_y1_max:g}  y1 min {s.y1_min:.3e}"
            )

    with open(out_dir / "chapman_ladder.csv", "w") as stream:
        stream.write("h,seconds,y1_min,positive,inner_mean,rebuilds\n")
        for row in ladder_rows:
            stream.write(",".join(str(v) for v in row) + "\n")
    print(f"\nartifacts in {out_dir}/")


if __name__ == "__main__":
    main()
