"""Recover diffusion dynamics from input/output pairs, output-space check.

Targets are produced by the solver itself with a single heat-term
coefficient of 0.5.  Training sees only the image pairs; success is judged
by re-evolving a held-out image with the learned schedule and comparing to
the true dynamics.  Coefficient-space agreement is not expected (the
invariant basis is not orthogonal), which this demo makes visible by
printing both the output-space error and the learned coefficient rows.

Run from the repository root:  python demos/diffusion_recovery.py
"""

import numpy as np

from pdelearn import (
    CoefficientSchedule,
    TrainerConfig,
    TrainingPair,
    evolve,
    pad,
    synthetic_scenes,
    train,
)


def main():
    dt = 0.02
    row = np.zeros(17)
    row[7] = 0.5  # Hessian-trace coefficient: plain isotropic diffusion
    true_sched = CoefficientSchedule.constant(dt, row)

    scenes = synthetic_scenes(4, 32, 32, seed=123)
    pairs = [
        TrainingPair(pad(s, 2), evolve(pad(s, 2), true_sched).final(), f"d{m}")
        for m, s in enumerate(scenes[:3])
    ]

    report = train(pairs, TrainerConfig(dt=dt, lam=1e-6, mu=1e-6, max_iters=200),
                   log=print)
    print(f"stopped: {report.termination}")

    held = pad(scenes[3], 2)
    got = evolve(held, report.schedule).final()
    want = evolve(held, true_sched).final()
    rms = float(np.sqrt(np.mean((got.interior - want.interior) ** 2)))
    print(f"held-out per-pixel RMS vs true dynamics: {rms:.2e}")

    mid = report.schedule.steps // 2
    with np.printoptions(precision=3, suppress=True):
        print("learned a-row at t=0.5 (17 coefficients):")
        print(report.schedule.a[mid])
    print("note: the output matches even though the coefficients are not "
          "the one-hot generator; many schedules realize the same flow.")


if __name__ == "__main__":
    main()
