"""Learn a Gaussian-blur operator from image pairs, then invert it.

Generates smooth synthetic scenes, blurs them with a sigma = 1 kernel to
make training targets, fits the evolution coefficients, and applies the
learned schedule to a held-out scene.  The exchanged (blurred -> sharp)
pairing trains the deblurring direction of the same model family.

Run from the repository root:  python demos/learn_blur.py
"""

import math
from pathlib import Path

import numpy as np

from pdelearn import (
    TrainerConfig,
    TrainingPair,
    evolve,
    gaussian_blur,
    pad,
    save_image,
    save_schedule,
    synthetic_scenes,
    train,
)

OUT = Path(__file__).parent / "output" / "blur"
OUT.mkdir(parents=True, exist_ok=True)


def psnr(a, b):
    return 10.0 * math.log10(1.0 / float(np.mean((a - b) ** 2)))


def fit(pairs, label):
    config = TrainerConfig(dt=0.02, lam=1e-6, mu=1e-6, max_iters=200)
    print(f"--- training {label} ---")
    report = train(pairs, config, log=print)
    print(f"stopped: {report.termination}")
    return report.schedule


def main():
    scenes = synthetic_scenes(6, 64, 64, seed=321)
    train_scenes, held = scenes[:5], scenes[5]

    blur_pairs = [
        TrainingPair(pad(s, 2), pad(gaussian_blur(s, 1.0), 2), f"blur{m}")
        for m, s in enumerate(train_scenes)
    ]
    blur_sched = fit(blur_pairs, "blurring (primal)")
    save_schedule(blur_sched, OUT / "blur_schedule.json")

    out = evolve(pad(held, 2), blur_sched).final()
    target = gaussian_blur(held, 1.0)
    print(f"held-out blur PSNR: {psnr(out.interior, target):.2f} dB")
    save_image(pad(held, 2), OUT / "held_input.png")
    save_image(out, OUT / "held_blurred_by_pde.png")
    save_image(pad(target, 2), OUT / "held_blurred_oracle.png")

    # The inverse problem is the same data with the roles exchanged.
    deblur_pairs = [
        TrainingPair(p.target, p.input, p.identifier + "_inv") for p in blur_pairs
    ]
    deblur_sched = fit(deblur_pairs, "deblurring (inverse)")
    save_schedule(deblur_sched, OUT / "deblur_schedule.json")

    blurred_held = gaussian_blur(held, 1.0)
    restored = evolve(pad(blurred_held, 2), deblur_sched).final()
    print(f"blurred input PSNR : {psnr(blurred_held, held):.2f} dB")
    print(f"restored PSNR      : {psnr(restored.interior, held):.2f} dB")
    save_image(restored, OUT / "held_restored.png")
    print(f"images and schedules written to {OUT}")


if __name__ == "__main__":
    main()
