"""Verify the adjoint gradient against finite differences, entry by entry.

Builds a random bounded schedule on two smooth random pairs and compares
dt-scaled adjoint gradient entries with central differences of the
objective.  The worst relative error should sit near finite-difference
truncation level, orders of magnitude below the 1e-3 acceptance bar.

Run from the repository root:  python demos/gradient_check.py
"""

import numpy as np

from pdelearn import CoefficientSchedule, TrainingPair, gradient_check, pad
from pdelearn.dataset_io import synthetic_scenes


def main():
    dt = 0.01
    steps = 100
    scenes = synthetic_scenes(4, 16, 16, seed=9)
    pairs = [
        TrainingPair(pad(scenes[0], 2), pad(scenes[1], 2), "p0"),
        TrainingPair(pad(scenes[2], 2), pad(scenes[3], 2), "p1"),
    ]
    rng = np.random.default_rng(7)
    sched = CoefficientSchedule(
        dt,
        rng.uniform(-0.25, 0.25, size=(steps, 17)),
        rng.uniform(-0.25, 0.25, size=(steps, 17)),
    )
    worst, rows = gradient_check(pairs, sched, lam=1e-4, mu=1e-4,
                                 n_entries=50, eps=1e-5, seed=3)
    print(f"{'entry':>6} {'adjoint':>14} {'finite diff':>14} {'rel err':>10}")
    for idx, adj, fd, rel in rows[:12]:
        print(f"{idx:6d} {adj:14.6e} {fd:14.6e} {rel:10.2e}")
    print(f"... {len(rows)} entries checked")
    print(f"worst relative error: {worst:.3e} (target <= 1e-3)")


if __name__ == "__main__":
    main()
