"""Render the 17 invariant maps of a synthetic scene as images.

Each map is min/max rescaled for inspection; constant maps come out
mid-gray.  The same dump is available from the command line as
`pdelearn invariants --input scene.png --out maps/`.

Run from the repository root:  python demos/invariant_maps.py
"""

from pathlib import Path

import numpy as np

from pdelearn import compute_invariants, derivatives, pad, save_image
from pdelearn.dataset_io import synthetic_scenes

OUT = Path(__file__).parent / "output" / "invariants"

LABELS = [
    "one", "v", "u", "grad_v_sq", "grad_u_sq", "grad_v_dot_grad_u",
    "trace_hess_v", "trace_hess_u", "vT_Hv_v", "vT_Hu_v", "vT_Hv_u",
    "vT_Hu_u", "uT_Hv_u", "uT_Hu_u", "trace_hess_v_sq",
    "trace_hess_v_hess_u", "trace_hess_u_sq",
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    scene = synthetic_scenes(1, 64, 64, seed=42)[0]
    field = pad(scene, 2)
    save_image(field, OUT / "scene.png")
    ch = derivatives(field)
    stack = compute_invariants(ch, ch)  # u = v = scene at t = 0
    p = field.pad
    for j in range(17):
        inner = stack.data[j, p:-p, p:-p]
        lo, hi = float(inner.min()), float(inner.max())
        scaled = np.full_like(inner, 0.5) if hi == lo else (inner - lo) / (hi - lo)
        save_image(pad(scaled, p), OUT / f"inv_{j:02d}_{LABELS[j]}.png")
        print(f"inv_{j:02d} ({LABELS[j]:>20}): range [{lo:+.4f}, {hi:+.4f}]")
    print(f"maps written to {OUT}")


if __name__ == "__main__":
    main()
