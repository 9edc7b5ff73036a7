"""Explicit time stepping of the coupled image/indicator evolution.

The right-hand sides are coefficient-weighted sums of the 17 invariants:
du/dt = sum_j a_j(t) inv_j(u, v) and dv/dt = sum_j b_j(t) inv_j(v, u),
integrated by forward Euler with unit final time and zero-Dirichlet halo.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    Field,
    derivatives,
    require_same_grid,
    time_steps,
    zero_halo,
)
from .invariants import INVARIANT_COUNT, SWAP, compute_invariants

# Values beyond this magnitude on [0,1]-normalized data mean the explicit
# scheme has diverged; the step reports blow-up instead of spreading NaNs.
BLOWUP_BOUND = 10.0


class BlowUpError(ArithmeticError):
    """The explicit scheme produced non-finite or out-of-bound values."""

    def __init__(self, magnitude: float, time_index=None):
        self.magnitude = magnitude
        self.time_index = time_index
        where = "" if time_index is None else f" at time index {time_index}"
        super().__init__(
            f"evolution blew up{where}: max |value| = {magnitude:g} "
            f"exceeds {BLOWUP_BOUND:g} or is not finite"
        )


def _coeff_rows(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (INVARIANT_COUNT,) or b.shape != (INVARIANT_COUNT,):
        raise ValueError(
            f"coefficient rows must have {INVARIANT_COUNT} entries, "
            f"got {a.shape} and {b.shape}"
        )
    return a, b


@dataclass
class CoefficientSchedule:
    """Piecewise-constant controls a_j(t), b_j(t) over steps of size dt.

    Row i applies on [i*dt, (i+1)*dt); there are time_steps(dt) rows, so
    the schedule covers exactly the unit time interval.
    """

    dt: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        steps = time_steps(self.dt)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        expected = (steps, INVARIANT_COUNT)
        if self.a.shape != expected or self.b.shape != expected:
            raise ValueError(
                f"schedule arrays must have shape {expected} for dt={self.dt}, "
                f"got a{self.a.shape} b{self.b.shape}"
            )
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ValueError("schedule coefficients must be finite")

    @property
    def steps(self) -> int:
        return self.a.shape[0]

    @classmethod
    def zeros(cls, dt: float) -> "CoefficientSchedule":
        n = time_steps(dt)
        return cls(dt, np.zeros((n, INVARIANT_COUNT)), np.zeros((n, INVARIANT_COUNT)))

    @classmethod
    def constant(cls, dt: float, a_row, b_row=None) -> "CoefficientSchedule":
        """Schedule holding the same coefficient rows at every step."""
        n = time_steps(dt)
        a_row = np.asarray(a_row, dtype=np.float64)
        b_row = np.zeros(INVARIANT_COUNT) if b_row is None else np.asarray(b_row)
        return cls(dt, np.tile(a_row, (n, 1)), np.tile(b_row, (n, 1)))

    def as_vector(self) -> np.ndarray:
        """Flatten to a single parameter vector (a block, then b block)."""
        return np.concatenate([self.a.ravel(), self.b.ravel()])

    def from_vector(self, vec: np.ndarray) -> "CoefficientSchedule":
        """New schedule with the same shape, parameters taken from vec."""
        n = self.steps * INVARIANT_COUNT
        if vec.shape != (2 * n,):
            raise ValueError(f"expected parameter vector of length {2 * n}")
        return CoefficientSchedule(
            self.dt,
            vec[:n].reshape(self.steps, INVARIANT_COUNT).copy(),
            vec[n:].reshape(self.steps, INVARIANT_COUNT).copy(),
        )


@dataclass
class Trajectory:
    """All stored (u, v) states at discrete times 0..T_m."""

    dt: float
    u_states: list
    v_states: list

    @property
    def steps(self) -> int:
        return len(self.u_states) - 1

    def final(self) -> Field:
        return self.u_states[-1]


def rhs(u: Field, v: Field, a, b):
    """Evolution right-hand sides (F_u, F_v) on the interior, zero halo."""
    require_same_grid(u, v)
    a, b = _coeff_rows(a, b)
    b_sw = b[SWAP]
    needed = np.flatnonzero((a != 0.0) | (b_sw != 0.0))
    stack = compute_invariants(derivatives(u), derivatives(v), needed=needed)
    fu = np.tensordot(a, stack.data, axes=(0, 0))
    fv = np.tensordot(b_sw, stack.data, axes=(0, 0))
    zero_halo(fu, u.pad)
    zero_halo(fv, u.pad)
    return u.with_values(fu), v.with_values(fv)


def step(u: Field, v: Field, a, b, dt: float):
    """One forward Euler step; halo re-zeroed; blow-up raises BlowUpError."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    fu, fv = rhs(u, v, a, b)
    new_u = u.values + dt * fu.values
    new_v = v.values + dt * fv.values
    zero_halo(new_u, u.pad)
    zero_halo(new_v, u.pad)
    magnitude = max(np.abs(new_u).max(), np.abs(new_v).max())
    if not magnitude <= BLOWUP_BOUND:
        raise BlowUpError(float(magnitude))
    return u.with_values(new_u), v.with_values(new_v)


def evolve(image: Field, sched: CoefficientSchedule) -> Trajectory:
    """Run the full evolution from u(0) = v(0) = image, storing every state.

    Meant for [0, 1]-normalized images (not enforced; analytic fields are
    fine).  Blow-up is re-raised with the index of the failing step.
    """
    u = v = image
    u_states = [u]
    v_states = [v]
    for i in range(sched.steps):
        try:
            u, v = step(u, v, sched.a[i], sched.b[i], sched.dt)
        except BlowUpError as err:
            raise BlowUpError(err.magnitude, time_index=i) from None
        u_states.append(u)
        v_states.append(v)
    return Trajectory(sched.dt, u_states, v_states)
