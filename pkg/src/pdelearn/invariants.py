"""Fundamental translation/rotation invariants of a coupled field pair.

The 17 invariants up to second order are evaluated pointwise from the
derivative channels of the two fields.  ``inv_j(u, v)`` puts u in the
first slot; the reordering convention ``inv_j(v, u)`` is the same table
with the slots exchanged, which on this basis is a fixed permutation of
the stack (see SWAP).
"""

from __future__ import annotations

import numpy as np

from .fields import DerivativeChannels, Field, GridMismatchError, PARTIALS

INVARIANT_COUNT = 17

# inv_j(v, u) == inv_{SWAP[j]}(u, v); SWAP is an involution.
SWAP = np.array([0, 2, 1, 4, 3, 5, 7, 6, 13, 12, 11, 10, 9, 8, 16, 15, 14])


class InvariantStack:
    """Stack of the 17 invariant fields, in table order, on the padded grid."""

    __slots__ = ("data", "pad")

    def __init__(self, data: np.ndarray, pad: int):
        self.data = data
        self.pad = pad

    def field(self, j: int) -> Field:
        return Field(self.data[j], self.pad, copy=True)

    def swapped(self) -> "InvariantStack":
        """The stack under the slot-exchange convention inv_j(v, u)."""
        return InvariantStack(self.data[SWAP], self.pad)

    def interior(self) -> np.ndarray:
        p = self.pad
        return self.data[:, p:-p, p:-p]


def _require_same_grid(cu: DerivativeChannels, cv: DerivativeChannels) -> None:
    if not cu.same_grid(cv):
        raise GridMismatchError("derivative channels live on different grids")


def compute_invariants(
    cu: DerivativeChannels,
    cv: DerivativeChannels,
    needed=None,
) -> InvariantStack:
    """Evaluate inv_j(u, v) for all j (or only the indices in `needed`).

    Rows not requested are left at zero; `needed=None` computes all 17.
    """
    _require_same_grid(cu, cv)
    shape = cu.shape
    data = np.zeros((INVARIANT_COUNT,) + shape)
    sel = range(INVARIANT_COUNT) if needed is None else sorted(set(needed))

    ux, uy, uxx, uxy, uyy = cu.fx, cu.fy, cu.fxx, cu.fxy, cu.fyy
    vx, vy, vxx, vxy, vyy = cv.fx, cv.fy, cv.fxx, cv.fxy, cv.fyy

    for j in sel:
        if j == 0:
            data[0] = 1.0
        elif j == 1:
            data[1] = cv.f
        elif j == 2:
            data[2] = cu.f
        elif j == 3:
            data[3] = vx * vx + vy * vy
        elif j == 4:
            data[4] = ux * ux + uy * uy
        elif j == 5:
            data[5] = vx * ux + vy * uy
        elif j == 6:
            data[6] = vxx + vyy
        elif j == 7:
            data[7] = uxx + uyy
        elif j == 8:
            data[8] = vx * vx * vxx + 2.0 * vx * vy * vxy + vy * vy * vyy
        elif j == 9:
            data[9] = vx * vx * uxx + 2.0 * vx * vy * uxy + vy * vy * uyy
        elif j == 10:
            data[10] = (
                vx * ux * vxx + (vx * uy + vy * ux) * vxy + vy * uy * vyy
            )
        elif j == 11:
            data[11] = (
                vx * ux * uxx + (vx * uy + vy * ux) * uxy + vy * uy * uyy
            )
        elif j == 12:
            data[12] = ux * ux * vxx + 2.0 * ux * uy * vxy + uy * uy * vyy
        elif j == 13:
            data[13] = ux * ux * uxx + 2.0 * ux * uy * uxy + uy * uy * uyy
        elif j == 14:
            data[14] = vxx * vxx + 2.0 * vxy * vxy + vyy * vyy
        elif j == 15:
            data[15] = vxx * uxx + 2.0 * vxy * uxy + vyy * uyy
        elif j == 16:
            data[16] = uxx * uxx + 2.0 * uxy * uxy + uyy * uyy
    return InvariantStack(data, cu.pad)


def _first_slot_entries(j: int, cu: DerivativeChannels, cv: DerivativeChannels):
    """Nonzero pointwise derivatives of inv_j(u, v) w.r.t. the u-channels.

    Returns {(p, q): array}; channels absent from the dict are identically
    zero.  Orders (p, q) follow PARTIALS: p in x, q in y.
    """
    ux, uy, uxx, uxy, uyy = cu.fx, cu.fy, cu.fxx, cu.fxy, cu.fyy
    vx, vy, vxx, vxy, vyy = cv.fx, cv.fy, cv.fxx, cv.fxy, cv.fyy
    one = np.ones(cu.shape)
    if j == 2:
        return {(0, 0): one}
    if j == 4:
        return {(1, 0): 2.0 * ux, (0, 1): 2.0 * uy}
    if j == 5:
        return {(1, 0): vx.copy(), (0, 1): vy.copy()}
    if j == 7:
        return {(2, 0): one, (0, 2): one.copy()}
    if j == 9:
        return {(2, 0): vx * vx, (1, 1): 2.0 * vx * vy, (0, 2): vy * vy}
    if j == 10:
        return {
            (1, 0): vx * vxx + vy * vxy,
            (0, 1): vx * vxy + vy * vyy,
        }
    if j == 11:
        return {
            (1, 0): vx * uxx + vy * uxy,
            (0, 1): vx * uxy + vy * uyy,
            (2, 0): vx * ux,
            (1, 1): vx * uy + vy * ux,
            (0, 2): vy * uy,
        }
    if j == 12:
        return {
            (1, 0): 2.0 * (ux * vxx + uy * vxy),
            (0, 1): 2.0 * (ux * vxy + uy * vyy),
        }
    if j == 13:
        return {
            (1, 0): 2.0 * (ux * uxx + uy * uxy),
            (0, 1): 2.0 * (ux * uxy + uy * uyy),
            (2, 0): ux * ux,
            (1, 1): 2.0 * ux * uy,
            (0, 2): uy * uy,
        }
    if j == 15:
        return {(2, 0): vxx.copy(), (1, 1): 2.0 * vxy, (0, 2): vyy.copy()}
    if j == 16:
        return {(2, 0): 2.0 * uxx, (1, 1): 4.0 * uxy, (0, 2): 2.0 * uyy}
    return {}


def _second_slot_entries(j: int, cu: DerivativeChannels, cv: DerivativeChannels):
    """Nonzero pointwise derivatives of inv_j(u, v) w.r.t. the v-channels."""
    ux, uy, uxx, uxy, uyy = cu.fx, cu.fy, cu.fxx, cu.fxy, cu.fyy
    vx, vy, vxx, vxy, vyy = cv.fx, cv.fy, cv.fxx, cv.fxy, cv.fyy
    one = np.ones(cu.shape)
    if j == 1:
        return {(0, 0): one}
    if j == 3:
        return {(1, 0): 2.0 * vx, (0, 1): 2.0 * vy}
    if j == 5:
        return {(1, 0): ux.copy(), (0, 1): uy.copy()}
    if j == 6:
        return {(2, 0): one, (0, 2): one.copy()}
    if j == 8:
        return {
            (1, 0): 2.0 * (vx * vxx + vy * vxy),
            (0, 1): 2.0 * (vx * vxy + vy * vyy),
            (2, 0): vx * vx,
            (1, 1): 2.0 * vx * vy,
            (0, 2): vy * vy,
        }
    if j == 9:
        return {
            (1, 0): 2.0 * (vx * uxx + vy * uxy),
            (0, 1): 2.0 * (vx * uxy + vy * uyy),
        }
    if j == 10:
        return {
            (1, 0): ux * vxx + uy * vxy,
            (0, 1): ux * vxy + uy * vyy,
            (2, 0): vx * ux,
            (1, 1): vx * uy + vy * ux,
            (0, 2): vy * uy,
        }
    if j == 11:
        return {
            (1, 0): ux * uxx + uy * uxy,
            (0, 1): ux * uxy + uy * uyy,
        }
    if j == 12:
        return {(2, 0): ux * ux, (1, 1): 2.0 * ux * uy, (0, 2): uy * uy}
    if j == 14:
        return {(2, 0): 2.0 * vxx, (1, 1): 4.0 * vxy, (0, 2): 2.0 * vyy}
    if j == 15:
        return {(2, 0): uxx.copy(), (1, 1): 2.0 * uxy, (0, 2): uyy.copy()}
    return {}


class InvariantJacobian:
    """Pointwise derivatives of every invariant w.r.t. every channel.

    Entries are materialized lazily per (j, slot) and cached, since the
    full 17 x 12 block of fields can be large on big grids.
    """

    def __init__(self, cu: DerivativeChannels, cv: DerivativeChannels):
        _require_same_grid(cu, cv)
        self.cu = cu
        self.cv = cv
        self._cache = {}

    def _entries(self, j: int, slot: str):
        key = (j, slot)
        if key not in self._cache:
            fn = _first_slot_entries if slot == "u" else _second_slot_entries
            self._cache[key] = fn(j, self.cu, self.cv)
        return self._cache[key]

    def du(self, j: int, p: int, q: int) -> np.ndarray:
        """Pointwise field of d inv_j(u, v) / d u_pq."""
        if (p, q) not in PARTIALS:
            raise ValueError(f"({p},{q}) is not in the partial index set")
        entry = self._entries(j, "u").get((p, q))
        return np.zeros(self.cu.shape) if entry is None else entry

    def dv(self, j: int, p: int, q: int) -> np.ndarray:
        """Pointwise field of d inv_j(u, v) / d v_pq."""
        if (p, q) not in PARTIALS:
            raise ValueError(f"({p},{q}) is not in the partial index set")
        entry = self._entries(j, "v").get((p, q))
        return np.zeros(self.cu.shape) if entry is None else entry


def invariant_jacobian(cu: DerivativeChannels, cv: DerivativeChannels) -> InvariantJacobian:
    return InvariantJacobian(cu, cv)


def weighted_channel_sensitivities(
    cu: DerivativeChannels,
    cv: DerivativeChannels,
    w: np.ndarray,
):
    """Coefficient-weighted jacobian sums sum_j w_j d inv_j(u,v) / d channel.

    Returns (by_u, by_v): dicts keyed by (p, q) holding pointwise fields;
    missing keys are identically zero.  Zero weights contribute nothing and
    are skipped.  This closed-form assembly is cross-checked in the tests
    against the per-entry InvariantJacobian route.
    """
    _require_same_grid(cu, cv)
    w = np.asarray(w, dtype=np.float64)
    ux, uy, uxx, uxy, uyy = cu.fx, cu.fy, cu.fxx, cu.fxy, cu.fyy
    vx, vy, vxx, vxy, vyy = cv.fx, cv.fy, cv.fxx, cv.fxy, cv.fyy

    by_u = {}
    by_v = {}

    def add(dest, pq, term):
        # Scalars accumulate as scalars (broadcasting handles mixes) and are
        # promoted to full arrays at the end.
        if pq in dest:
            dest[pq] = dest[pq] + term
        else:
            dest[pq] = term

    # u-slot sensitivities
    if w[2]:
        add(by_u, (0, 0), w[2])
    if w[4]:
        add(by_u, (1, 0), (2.0 * w[4]) * ux)
        add(by_u, (0, 1), (2.0 * w[4]) * uy)
    if w[5]:
        add(by_u, (1, 0), w[5] * vx)
        add(by_u, (0, 1), w[5] * vy)
    if w[7]:
        add(by_u, (2, 0), w[7])
        add(by_u, (0, 2), w[7])
    if w[9]:
        add(by_u, (2, 0), w[9] * (vx * vx))
        add(by_u, (1, 1), (2.0 * w[9]) * (vx * vy))
        add(by_u, (0, 2), w[9] * (vy * vy))
    if w[10]:
        add(by_u, (1, 0), w[10] * (vx * vxx + vy * vxy))
        add(by_u, (0, 1), w[10] * (vx * vxy + vy * vyy))
    if w[11]:
        add(by_u, (1, 0), w[11] * (vx * uxx + vy * uxy))
        add(by_u, (0, 1), w[11] * (vx * uxy + vy * uyy))
        add(by_u, (2, 0), w[11] * (vx * ux))
        add(by_u, (1, 1), w[11] * (vx * uy + vy * ux))
        add(by_u, (0, 2), w[11] * (vy * uy))
    if w[12]:
        add(by_u, (1, 0), (2.0 * w[12]) * (ux * vxx + uy * vxy))
        add(by_u, (0, 1), (2.0 * w[12]) * (ux * vxy + uy * vyy))
    if w[13]:
        add(by_u, (1, 0), (2.0 * w[13]) * (ux * uxx + uy * uxy))
        add(by_u, (0, 1), (2.0 * w[13]) * (ux * uxy + uy * uyy))
        add(by_u, (2, 0), w[13] * (ux * ux))
        add(by_u, (1, 1), (2.0 * w[13]) * (ux * uy))
        add(by_u, (0, 2), w[13] * (uy * uy))
    if w[15]:
        add(by_u, (2, 0), w[15] * vxx)
        add(by_u, (1, 1), (2.0 * w[15]) * vxy)
        add(by_u, (0, 2), w[15] * vyy)
    if w[16]:
        add(by_u, (2, 0), (2.0 * w[16]) * uxx)
        add(by_u, (1, 1), (4.0 * w[16]) * uxy)
        add(by_u, (0, 2), (2.0 * w[16]) * uyy)

    # v-slot sensitivities
    if w[1]:
        add(by_v, (0, 0), w[1])
    if w[3]:
        add(by_v, (1, 0), (2.0 * w[3]) * vx)
        add(by_v, (0, 1), (2.0 * w[3]) * vy)
    if w[5]:
        add(by_v, (1, 0), w[5] * ux)
        add(by_v, (0, 1), w[5] * uy)
    if w[6]:
        add(by_v, (2, 0), w[6])
        add(by_v, (0, 2), w[6])
    if w[8]:
        add(by_v, (1, 0), (2.0 * w[8]) * (vx * vxx + vy * vxy))
        add(by_v, (0, 1), (2.0 * w[8]) * (vx * vxy + vy * vyy))
        add(by_v, (2, 0), w[8] * (vx * vx))
        add(by_v, (1, 1), (2.0 * w[8]) * (vx * vy))
        add(by_v, (0, 2), w[8] * (vy * vy))
    if w[9]:
        add(by_v, (1, 0), (2.0 * w[9]) * (vx * uxx + vy * uxy))
        add(by_v, (0, 1), (2.0 * w[9]) * (vx * uxy + vy * uyy))
    if w[10]:
        add(by_v, (1, 0), w[10] * (ux * vxx + uy * vxy))
        add(by_v, (0, 1), w[10] * (ux * vxy + uy * vyy))
        add(by_v, (2, 0), w[10] * (vx * ux))
        add(by_v, (1, 1), w[10] * (vx * uy + vy * ux))
        add(by_v, (0, 2), w[10] * (vy * uy))
    if w[11]:
        add(by_v, (1, 0), w[11] * (ux * uxx + uy * uxy))
        add(by_v, (0, 1), w[11] * (ux * uxy + uy * uyy))
    if w[12]:
        add(by_v, (2, 0), w[12] * (ux * ux))
        add(by_v, (1, 1), (2.0 * w[12]) * (ux * uy))
        add(by_v, (0, 2), w[12] * (uy * uy))
    if w[14]:
        add(by_v, (2, 0), (2.0 * w[14]) * vxx)
        add(by_v, (1, 1), (4.0 * w[14]) * vxy)
        add(by_v, (0, 2), (2.0 * w[14]) * vyy)
    if w[15]:
        add(by_v, (2, 0), w[15] * uxx)
        add(by_v, (1, 1), (2.0 * w[15]) * uxy)
        add(by_v, (0, 2), w[15] * uyy)

    # Promote any scalar accumulations (possible when only constant-entry
    # invariants carry weight) to full arrays.
    for dest in (by_u, by_v):
        for pq, val in dest.items():
            if not isinstance(val, np.ndarray):
                dest[pq] = np.full(cu.shape, val)
    return by_u, by_v
