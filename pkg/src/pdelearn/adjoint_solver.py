"""Backward-in-time solve of the adjoint system for gradient assembly.

The adjoint pair (phi, psi) satisfies, backward from t = 1,

    d(phi)/dt = -sum_{(p,q)} (-1)^{p+q} d^{p+q}[A_pq phi + B_pq psi]
    d(psi)/dt = -sum_{(p,q)} (-1)^{p+q} d^{p+q}[C_pq phi + D_pq psi]

where A, B, C, D are the four linearization families of the forward
right-hand sides with respect to the u- and v-channels.  The divergence
terms first form the product field and then apply the same discrete
stencils as the forward pass; since those stencils are exactly anti- or
self-adjoint on halo-supported data, the spatial operator is the exact
transpose of the forward linearization.

Time alignment: the backward step crossing [t_i, t_{i+1}] evaluates the
coefficient families at the stored state of index i, the state from which
the forward step departed.  With that choice the whole sweep is the exact
transpose of the discrete forward pass, which the finite-difference
gradient checks confirm to truncation accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import PARTIALS, Field, apply_partial, derivatives, require_same_grid, zero_halo
from .forward_solver import BLOWUP_BOUND, BlowUpError, CoefficientSchedule, Trajectory, _coeff_rows
from .invariants import SWAP, weighted_channel_sensitivities

# (-1)^(p+q) for each order in the partial index set.
_SIGNS = {(0, 0): 1.0, (0, 1): -1.0, (1, 0): -1.0, (0, 2): 1.0, (1, 1): 1.0, (2, 0): 1.0}


@dataclass
class SigmaFamilies:
    """Linearization coefficient fields, keyed by derivative order (p, q).

    A = dF_u/du_pq, B = dF_v/du_pq, C = dF_u/dv_pq, D = dF_v/dv_pq.
    Missing keys are identically zero.
    """

    A: dict
    B: dict
    C: dict
    D: dict


@dataclass
class AdjointTrajectory:
    """Adjoint states at discrete times 0..T_m (phi pairs with u, psi with v)."""

    dt: float
    phi_states: list
    psi_states: list


def sigma_fields(state, a, b) -> SigmaFamilies:
    """The four linearization families at one stored forward state."""
    u, v = state
    require_same_grid(u, v)
    a, b = _coeff_rows(a, b)
    cu = derivatives(u)
    cv = derivatives(v)
    fam_a, fam_c = weighted_channel_sensitivities(cu, cv, a)
    fam_b, fam_d = weighted_channel_sensitivities(cu, cv, b[SWAP])
    return SigmaFamilies(A=fam_a, B=fam_b, C=fam_c, D=fam_d)


def _transport(coef_phi: dict, coef_psi: dict, phi: np.ndarray, psi: np.ndarray, shape):
    """sum over (p,q) of (-1)^(p+q) D_pq[coef_phi * phi + coef_psi * psi].

    Terms accumulate in PARTIALS order so the reduction order is fixed.
    """
    out = np.zeros(shape)
    for pq in PARTIALS:
        if pq not in coef_phi and pq not in coef_psi:
            continue
        term = None
        cp = coef_phi.get(pq)
        if cp is not None:
            term = cp * phi
        cs = coef_psi.get(pq)
        if cs is not None:
            term = cs * psi if term is None else term + cs * psi
        d = apply_partial(term, *pq)
        if _SIGNS[pq] > 0:
            out += d
        else:
            out -= d
    return out


def adjoint_step(phi: Field, psi: Field, state, a, b, dt: float):
    """One backward sweep step from time index i+1 to i.

    `state` is the stored forward (u, v) the crossed step departed from
    (index i), and (a, b) are the coefficient rows of that step.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    fam = sigma_fields(state, a, b)
    shape = phi.values.shape
    new_phi = phi.values + dt * _transport(fam.A, fam.B, phi.values, psi.values, shape)
    new_psi = psi.values + dt * _transport(fam.C, fam.D, phi.values, psi.values, shape)
    zero_halo(new_phi, phi.pad)
    zero_halo(new_psi, phi.pad)
    magnitude = max(np.abs(new_phi).max(), np.abs(new_psi).max())
    if not magnitude <= BLOWUP_BOUND:
        raise BlowUpError(float(magnitude))
    return phi.with_values(new_phi), psi.with_values(new_psi)


def solve_adjoint(
    traj: Trajectory,
    sched: CoefficientSchedule,
    residual: Field,
) -> AdjointTrajectory:
    """Full backward sweep with phi(1) = residual and psi(1) = 0.

    The caller supplies residual = target - u(1); every state is stored.
    """
    if traj.steps != sched.steps:
        raise ValueError(
            f"trajectory has {traj.steps} steps but schedule has {sched.steps}"
        )
    require_same_grid(traj.u_states[-1], residual)
    n = traj.steps
    terminal = residual.values.copy()
    zero_halo(terminal, residual.pad)
    phi = residual.with_values(terminal)
    psi = residual.with_values(np.zeros_like(terminal))
    phi_states = [None] * (n + 1)
    psi_states = [None] * (n + 1)
    phi_states[n] = phi
    psi_states[n] = psi
    for i in range(n - 1, -1, -1):
        state = (traj.u_states[i], traj.v_states[i])
        try:
            phi, psi = adjoint_step(phi, psi, state, sched.a[i], sched.b[i], sched.dt)
        except BlowUpError as err:
            raise BlowUpError(err.magnitude, time_index=i) from None
        phi_states[i] = phi
        psi_states[i] = psi
    return AdjointTrajectory(sched.dt, phi_states, psi_states)
