"""Padded scalar fields, finite-difference stencils, and quadrature.

Arrays are indexed ``[row, col]`` with rows running along y and columns
along x.  A derivative order ``(p, q)`` means p-fold differentiation in x
and q-fold in y, so ``(1, 0)`` is f_x and ``(0, 2)`` is f_yy.  All stencils
use grid spacing 1.
"""

from __future__ import annotations

import numpy as np

# Index set for partial differentiation up to second order, frozen order.
PARTIALS = ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))

MIN_SIZE = 3
DEFAULT_PAD = 2


class Field:
    """A real scalar function on a pixel grid surrounded by a halo band.

    The value array has shape ``(height + 2*pad, width + 2*pad)``.  Fields
    are immutable: the array is write-protected and every operation returns
    a new instance.  Evolution operators keep the halo at exactly zero
    (Dirichlet boundary); analytic test fields may carry nonzero halo
    values, which construction permits.
    """

    __slots__ = ("values", "width", "height", "pad", "_channels")

    def __init__(self, values, pad: int, copy: bool = True):
        arr = np.array(values, dtype=np.float64, copy=copy)
        if arr.ndim != 2:
            raise ValueError("field values must be a 2-D array")
        if pad < DEFAULT_PAD:
            raise ValueError(f"halo width must be at least {DEFAULT_PAD}, got {pad}")
        height = arr.shape[0] - 2 * pad
        width = arr.shape[1] - 2 * pad
        if height < MIN_SIZE or width < MIN_SIZE:
            raise ValueError(
                f"interior must be at least {MIN_SIZE}x{MIN_SIZE}, "
                f"got {height}x{width}"
            )
        arr.setflags(write=False)
        self.values = arr
        self.width = width
        self.height = height
        self.pad = pad
        self._channels = None

    @property
    def interior(self) -> np.ndarray:
        """Read-only view of the non-halo region."""
        p = self.pad
        return self.values[p:-p, p:-p]

    def interior_copy(self) -> np.ndarray:
        return np.array(self.interior)

    def same_grid(self, other: "Field") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.pad == other.pad
        )

    def with_values(self, values: np.ndarray, copy: bool = False) -> "Field":
        """New field on the same grid with the given padded array."""
        return Field(values, self.pad, copy=copy)

    def with_interior(self, interior: np.ndarray) -> "Field":
        """New field with the given interior and a zero halo."""
        return pad(interior, self.pad)

    def __repr__(self) -> str:
        return f"Field({self.height}x{self.width}, pad={self.pad})"


class GridMismatchError(ValueError):
    """Raised when two fields that must share a grid do not."""


def require_same_grid(*fields: Field) -> None:
    first = fields[0]
    for other in fields[1:]:
        if not first.same_grid(other):
            raise GridMismatchError(
                f"grid mismatch: {first!r} vs {other!r}"
            )


class DerivativeChannels:
    """The six partial-derivative fields of one Field, indexed by PARTIALS.

    Channels are evaluated wherever the centred stencil fits inside the
    padded array and are zero on the outermost ring(s) where it does not.
    """

    __slots__ = ("pad", "shape", "f", "fx", "fy", "fxx", "fxy", "fyy")

    def __init__(self, pad, shape, f, fx, fy, fxx, fxy, fyy):
        self.pad = pad
        self.shape = shape
        self.f = f
        self.fx = fx
        self.fy = fy
        self.fxx = fxx
        self.fxy = fxy
        self.fyy = fyy

    def get(self, p: int, q: int) -> np.ndarray:
        """Channel array for derivative order (p, q)."""
        try:
            return {
                (0, 0): self.f,
                (1, 0): self.fx,
                (0, 1): self.fy,
                (2, 0): self.fxx,
                (1, 1): self.fxy,
                (0, 2): self.fyy,
            }[(p, q)]
        except KeyError:
            raise ValueError(f"({p},{q}) is not in the partial index set") from None

    def as_field(self, p: int, q: int) -> Field:
        return Field(self.get(p, q), self.pad, copy=True)

    def same_grid(self, other: "DerivativeChannels") -> bool:
        return self.shape == other.shape and self.pad == other.pad


def diff_x(arr: np.ndarray) -> np.ndarray:
    """Central first difference along x: (f(x+1) - f(x-1)) / 2."""
    out = np.zeros_like(arr)
    out[:, 1:-1] = (arr[:, 2:] - arr[:, :-2]) * 0.5
    return out


def diff_y(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    out[1:-1, :] = (arr[2:, :] - arr[:-2, :]) * 0.5
    return out


def diff_xx(arr: np.ndarray) -> np.ndarray:
    """Second difference along x: f(x-1) - 2 f(x) + f(x+1).

    The neighbors are summed before subtracting 2 f(x) so the reduction
    order is symmetric, which makes 90-degree rotation equivariance exact
    in floating point.
    """
    out = np.zeros_like(arr)
    out[:, 1:-1] = (arr[:, 2:] + arr[:, :-2]) - 2.0 * arr[:, 1:-1]
    return out


def diff_yy(arr: np.ndarray) -> np.ndarray:
    out = np.zeros_like(arr)
    out[1:-1, :] = (arr[2:, :] + arr[:-2, :]) - 2.0 * arr[1:-1, :]
    return out


def diff_xy(arr: np.ndarray) -> np.ndarray:
    """Mixed derivative as central-x of central-y."""
    return diff_x(diff_y(arr))


def apply_partial(arr: np.ndarray, p: int, q: int) -> np.ndarray:
    """Apply the (p, q) stencil; identity for (0, 0)."""
    if (p, q) == (0, 0):
        return arr
    if (p, q) == (1, 0):
        return diff_x(arr)
    if (p, q) == (0, 1):
        return diff_y(arr)
    if (p, q) == (2, 0):
        return diff_xx(arr)
    if (p, q) == (0, 2):
        return diff_yy(arr)
    if (p, q) == (1, 1):
        return diff_xy(arr)
    raise ValueError(f"({p},{q}) is not in the partial index set")


def pad(image, halo: int = DEFAULT_PAD) -> Field:
    """Embed an image in a zero halo of the given width.

    The interior equals the image; every halo value is exactly 0.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be a 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if halo < DEFAULT_PAD:
        raise ValueError(f"halo width must be at least {DEFAULT_PAD}, got {halo}")
    h, w = arr.shape
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ValueError(f"image must be at least {MIN_SIZE}x{MIN_SIZE}, got {h}x{w}")
    full = np.zeros((h + 2 * halo, w + 2 * halo), dtype=np.float64)
    full[halo:-halo, halo:-halo] = arr
    return Field(full, halo, copy=False)


def derivatives(f: Field) -> DerivativeChannels:
    """All six derivative channels of a field, cached on the instance."""
    if f._channels is None:
        a = f.values
        f._channels = DerivativeChannels(
            pad=f.pad,
            shape=a.shape,
            f=a,
            fx=diff_x(a),
            fy=diff_y(a),
            fxx=diff_xx(a),
            fxy=diff_xy(a),
            fyy=diff_yy(a),
        )
    return f._channels


def integrate_space(f: Field) -> float:
    """Normalized spatial integral (1/N) * sum over interior nodes.

    Uses numpy's pairwise summation, which is deterministic for a given
    array shape and dtype.
    """
    return float(f.interior.sum()) / (f.width * f.height)


def mean_interior(arr: np.ndarray, pad: int) -> float:
    """integrate_space on a raw padded array (hot-path variant)."""
    inner = arr[pad:-pad, pad:-pad]
    return float(inner.sum()) / inner.size


def time_steps(dt: float) -> int:
    """Number of evolution steps for unit final time: floor(1/dt + 0.5)."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return int(np.floor(1.0 / dt + 0.5))


def integrate_time(samples, dt: float) -> float:
    """Rectangle-rule time quadrature dt * sum(samples).

    The sample sequence must cover every discrete time 0..T_m, i.e. have
    length time_steps(dt) + 1.
    """
    expected = time_steps(dt) + 1
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != expected:
        raise ValueError(
            f"expected {expected} samples for dt={dt}, got {arr.shape}"
        )
    return dt * float(arr.sum())


def zero_halo(values: np.ndarray, pad: int) -> None:
    """Re-zero the halo band in place (values must be writable)."""
    values[:pad, :] = 0.0
    values[-pad:, :] = 0.0
    values[:, :pad] = 0.0
    values[:, -pad:] = 0.0


def rotate90(f: Field) -> Field:
    """Rotate a square field counterclockwise by 90 degrees."""
    if f.width != f.height:
        raise ValueError("rotation requires a square grid")
    return Field(np.rot90(f.values), f.pad, copy=True)


def rotate90_channels(ch: DerivativeChannels) -> DerivativeChannels:
    """Channel permutation/sign map matching rotate90 of the source field.

    For B = rot90(A): B_x = rot(A_y), B_y = -rot(A_x), B_xx = rot(A_yy),
    B_yy = rot(A_xx), B_xy = -rot(A_xy).
    """
    rot = np.rot90
    return DerivativeChannels(
        pad=ch.pad,
        shape=ch.shape,
        f=rot(ch.f).copy(),
        fx=rot(ch.fy).copy(),
        fy=-rot(ch.fx),
        fxx=rot(ch.fyy).copy(),
        fxy=-rot(ch.fxy),
        fyy=rot(ch.fxx).copy(),
    )


def shift_interior(f: Field, dx: int, dy: int) -> Field:
    """Translate the interior content by integer (dx, dy), zero-filling.

    Content pushed past the interior edge is lost; the halo stays zero.
    """
    src = f.interior
    out = np.zeros_like(src)
    h, w = src.shape
    if abs(dx) >= w or abs(dy) >= h:
        return f.with_interior(out)
    sy = slice(max(0, dy), h + min(0, dy))
    sx = slice(max(0, dx), w + min(0, dx))
    ty = slice(max(0, -dy), h + min(0, -dy))
    tx = slice(max(0, -dx), w + min(0, -dx))
    out[sy, sx] = src[ty, tx]
    return f.with_interior(out)
