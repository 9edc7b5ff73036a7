"""File formats, training manifests, and synthetic task generation.

Formats
-------
Images: 8-bit binary PGM (P5, maxval 255) or 8-bit grayscale PNG.
Intensities map to [0, 1] as value / 255 on load; on save the interior is
clamped to [0, 1] and quantized with round-half-to-even.

Schedules: JSON {"dt", "T_m", "a", "b"} where a and b are T_m rows of 17
numbers.  Python's repr-based JSON floats give exact decimal round-trips.

Manifests: JSON {"pad", "dt", "pairs": [{"input", "target", "id"}, ...]}
with image paths relative to the manifest file.

The synthetic-noise generator is numpy's PCG64 (np.random.default_rng)
drawing standard normals, so a seed fully determines every generated file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import convolve1d

from .fields import Field, pad as pad_field, time_steps
from .forward_solver import CoefficientSchedule
from .invariants import INVARIANT_COUNT
from .objective import TrainingPair


class ImageFormatError(ValueError):
    """An image file is unsupported or malformed."""


class ScheduleFormatError(ValueError):
    """A schedule file does not satisfy the schema."""


class ManifestError(ValueError):
    """A manifest is malformed or references unusable files."""


# ---------------------------------------------------------------------------
# images


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary (P5) PGM file")
    # Tokenize the header: magic, width, height, maxval; '#' starts a comment.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as err:
        raise ImageFormatError(f"{path}: bad PGM header {tokens}") from err
    if maxval != 255:
        raise ImageFormatError(f"{path}: only maxval 255 supported, got {maxval}")
    expected = width * height
    raw = data[pos : pos + expected]
    if len(raw) != expected:
        raise ImageFormatError(f"{path}: expected {expected} pixel bytes")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width)


def _write_pgm(path: Path, arr: np.ndarray) -> None:
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + arr.tobytes())


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode != "L":
            raise ImageFormatError(
                f"{path}: single-channel 8-bit PNG required, got mode {im.mode}"
            )
        return np.asarray(im, dtype=np.uint8)


def _write_png(path: Path, arr: np.ndarray) -> None:
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_image(path, halo: int = 2) -> Field:
    """Load a grayscale image as a [0, 1] field with the given halo."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        raw = _read_pgm(path)
    elif suffix == ".png":
        raw = _read_png(path)
    else:
        raise ImageFormatError(f"{path}: unsupported extension {suffix!r}")
    if raw.shape[0] < 3 or raw.shape[1] < 3:
        raise ImageFormatError(f"{path}: image must be at least 3x3, got {raw.shape}")
    return pad_field(raw.astype(np.float64) / 255.0, halo)


def quantize(interior: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to 8 bits (round-half-to-even)."""
    clipped = np.clip(interior, 0.0, 1.0)
    return np.rint(clipped * 255.0).astype(np.uint8)


def save_image(field: Field, path) -> None:
    """Write the interior as PGM or PNG, chosen by extension."""
    path = Path(path)
    arr = quantize(field.interior)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        _write_pgm(path, arr)
    elif suffix == ".png":
        _write_png(path, arr)
    else:
        raise ImageFormatError(f"{path}: unsupported extension {suffix!r}")


# ---------------------------------------------------------------------------
# schedules


def save_schedule(sched: CoefficientSchedule, path) -> None:
    doc = {
        "dt": sched.dt,
        "T_m": sched.steps,
        "a": sched.a.tolist(),
        "b": sched.b.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_schedule(path) -> CoefficientSchedule:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ScheduleFormatError(f"{path}: invalid JSON: {err}") from err
    for key in ("dt", "T_m", "a", "b"):
        if key not in doc:
            raise ScheduleFormatError(f"{path}: missing field {key!r}")
    dt = doc["dt"]
    if not isinstance(dt, (int, float)) or not dt > 0:
        raise ScheduleFormatError(f"{path}: dt must be a positive number, got {dt!r}")
    steps = time_steps(dt)
    if doc["T_m"] != steps:
        raise ScheduleFormatError(
            f"{path}: declared T_m={doc['T_m']} but dt={dt} implies {steps}"
        )
    a = np.asarray(doc["a"], dtype=np.float64)
    b = np.asarray(doc["b"], dtype=np.float64)
    if a.shape != (steps, INVARIANT_COUNT) or b.shape != (steps, INVARIANT_COUNT):
        raise ScheduleFormatError(
            f"{path}: a and b must each be {steps} rows of {INVARIANT_COUNT} numbers"
        )
    try:
        return CoefficientSchedule(dt, a, b)
    except ValueError as err:
        raise ScheduleFormatError(f"{path}: {err}") from err


# ---------------------------------------------------------------------------
# manifests


@dataclass
class ManifestEntry:
    input_path: Path
    target_path: Path
    identifier: str


@dataclass
class Manifest:
    """Training pair listing plus the halo width and dt intended for it."""

    entries: list
    pad: int
    dt: float
    base_dir: Path

    def load_pairs(self):
        pairs = [
            TrainingPair(
                load_image(e.input_path, self.pad),
                load_image(e.target_path, self.pad),
                e.identifier,
            )
            for e in self.entries
        ]
        first = pairs[0].input
        for p in pairs[1:]:
            if not p.input.same_grid(first):
                raise ManifestError(
                    f"manifest mixes image sizes: {p.identifier} is "
                    f"{p.input.height}x{p.input.width}, expected "
                    f"{first.height}x{first.width}"
                )
        return pairs


def save_manifest(manifest_path, entries, pad: int = 2, dt: float = 0.02) -> None:
    """Write a manifest; entry paths are stored relative to the manifest."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    doc = {
        "pad": pad,
        "dt": dt,
        "pairs": [
            {
                "input": str(Path(inp).relative_to(base)) if Path(inp).is_absolute() else str(inp),
                "target": str(Path(tgt).relative_to(base)) if Path(tgt).is_absolute() else str(tgt),
                "id": ident,
            }
            for inp, tgt, ident in entries
        ],
    }
    manifest_path.write_text(json.dumps(doc, indent=1) + "\n")


def load_manifest(path) -> Manifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ManifestError(f"{path}: invalid JSON: {err}") from err
    pairs = doc.get("pairs")
    if not isinstance(pairs, list) or not pairs:
        raise ManifestError(f"{path}: manifest needs a non-empty 'pairs' list")
    halo = int(doc.get("pad", 2))
    dt = float(doc.get("dt", 0.02))
    entries = []
    for idx, item in enumerate(pairs):
        try:
            inp = path.parent / item["input"]
            tgt = path.parent / item["target"]
        except (KeyError, TypeError) as err:
            raise ManifestError(f"{path}: entry {idx} is malformed") from err
        if str(inp) == str(tgt):
            raise ManifestError(
                f"{path}: entry {idx} uses the same file for input and target"
            )
        for p in (inp, tgt):
            if not p.exists():
                raise ManifestError(f"{path}: entry {idx} references missing file {p}")
        entries.append(ManifestEntry(inp, tgt, str(item.get("id", idx))))
    return Manifest(entries, halo, dt, path.parent)


# ---------------------------------------------------------------------------
# synthetic-task oracles (independent of the PDE solver modules)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Truncated sampled Gaussian, radius ceil(3 sigma), renormalized."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable truncated-Gaussian convolution with zero-fill borders."""
    k = gaussian_kernel(sigma)
    tmp = convolve1d(np.asarray(image, dtype=np.float64), k, axis=0, mode="constant")
    return convolve1d(tmp, k, axis=1, mode="constant")


def diffuse(image: np.ndarray, coefficient: float, duration: float, dt: float) -> np.ndarray:
    """Explicit heat-equation reference stepper with a zero boundary.

    Written independently of the evolution modules: 4-neighbor Laplacian on
    a zero-padded copy, forward Euler, n = round(duration / dt) steps.
    """
    if dt <= 0 or duration < 0:
        raise ValueError("need dt > 0 and duration >= 0")
    n = int(round(duration / dt))
    h, w = np.asarray(image).shape
    buf = np.zeros((h + 2, w + 2), dtype=np.float64)
    buf[1:-1, 1:-1] = image
    for _ in range(n):
        lap = (
            buf[:-2, 1:-1]
            + buf[2:, 1:-1]
            + buf[1:-1, :-2]
            + buf[1:-1, 2:]
            - 4.0 * buf[1:-1, 1:-1]
        )
        buf[1:-1, 1:-1] += dt * coefficient * lap
    return buf[1:-1, 1:-1].copy()


def add_noise(image: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Additive Gaussian noise clipped to [0, 1]."""
    if sigma == 0.0:
        return np.asarray(image, dtype=np.float64).copy()
    noisy = image + sigma * rng.standard_normal(np.asarray(image).shape)
    return np.clip(noisy, 0.0, 1.0)


@dataclass
class BlurTask:
    sigma: float = 1.0

    name = "blur"

    def apply(self, image, rng):
        return gaussian_blur(image, self.sigma)


@dataclass
class DiffuseTask:
    coefficient: float = 0.5
    duration: float = 1.0
    dt: float = 0.02

    name = "diffuse"

    def apply(self, image, rng):
        return diffuse(image, self.coefficient, self.duration, self.dt)


@dataclass
class NoiseTask:
    sigma: float = 15.0 / 255.0

    name = "noise"

    def apply(self, image, rng):
        return add_noise(image, self.sigma, rng)


@dataclass
class IdentityTask:
    name = "identity"

    def apply(self, image, rng):
        return np.asarray(image, dtype=np.float64).copy()


def make_synthetic(
    task,
    sources,
    out_dir,
    exchange: bool = False,
    seed: int = 0,
    dt: float = 0.02,
    pad: int = 2,
    fmt: str = "png",
) -> Path:
    """Write (input, target) image files plus a manifest for a named task.

    `sources` is a sequence of 2-D arrays in [0, 1].  The target of each
    source is the task oracle applied to it; `exchange` swaps the roles so
    the same oracle defines the inverse problem.  Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for idx, src in enumerate(sources):
        src = np.asarray(src, dtype=np.float64)
        produced = task.apply(src, rng)
        inp_arr, tgt_arr = (produced, src) if exchange else (src, produced)
        ident = f"{task.name}_{idx:03d}"
        inp_name = f"{ident}_input.{fmt}"
        tgt_name = f"{ident}_target.{fmt}"
        save_image(pad_field(inp_arr, pad), out_dir / inp_name)
        save_image(pad_field(tgt_arr, pad), out_dir / tgt_name)
        entries.append((inp_name, tgt_name, ident))
    manifest_path = out_dir / "manifest.json"
    save_manifest(manifest_path, entries, pad=pad, dt=dt)
    return manifest_path


# ---------------------------------------------------------------------------
# procedural source imagery for desk-scale experiments


def synthetic_scenes(count: int, height: int, width: int, seed: int = 0):
    """Reproducible smooth test scenes: ramp + Gaussian blobs + a soft disk.

    Values stay inside (0, 1) so blur/deblur/denoise targets remain
    representable after quantization.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yy /= max(height - 1, 1)
    xx /= max(width - 1, 1)
    scenes = []
    for _ in range(count):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        img = 0.45 + 0.12 * ((xx - 0.5) * math.cos(theta) + (yy - 0.5) * math.sin(theta))
        for _ in range(int(rng.integers(3, 7))):
            cx, cy = rng.uniform(0.15, 0.85, size=2)
            width_frac = rng.uniform(0.06, 0.22)
            amp = rng.uniform(0.12, 0.35) * (1 if rng.random() < 0.5 else -1)
            r2 = (xx - cx) ** 2 + (yy - cy) ** 2
            img = img + amp * np.exp(-r2 / (2.0 * width_frac**2))
        # One soft-edged disk for stronger, localized contrast.
        cx, cy = rng.uniform(0.25, 0.75, size=2)
        radius = rng.uniform(0.12, 0.3)
        edge = 0.02 + rng.uniform(0.0, 0.03)
        dist = np.sqrt((xx - cx) ** 2 + (yy - cy) ** 2)
        img = img + rng.uniform(-0.3, 0.3) * 0.5 * (1.0 - np.tanh((dist - radius) / edge))
        scenes.append(np.clip(img, 0.02, 0.98))
    return scenes
