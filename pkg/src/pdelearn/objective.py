"""Tracking objective and its gradient with respect to the controls.

J = 1/2 sum_m int_Omega (u_m(1) - O_m)^2 dOmega
  + 1/2 sum_j lambda_j int a_j(t)^2 dt + 1/2 sum_j mu_j int b_j(t)^2 dt

with the normalized spatial quadrature of the fields module and the exact
piecewise-constant time quadrature dt * sum_i c[i]^2.  The gradient holds
the per-unit-time derivative of each schedule entry: lambda_j a_j on step
i minus the correlation of the adjoint at the step's arrival time with the
invariants at its departure state.  That pairing makes the sweep the exact
transpose of the discrete forward pass, so dt times each entry matches
central finite differences of the discrete objective to truncation
accuracy (the acceptance gradient check exercises this).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adjoint_solver import solve_adjoint
from .fields import Field, derivatives, require_same_grid
from .forward_solver import BlowUpError, CoefficientSchedule, evolve
from .invariants import INVARIANT_COUNT, SWAP, compute_invariants


@dataclass
class TrainingPair:
    """An input image and the expected output on the same grid."""

    input: Field
    target: Field
    identifier: str = ""

    def __post_init__(self):
        require_same_grid(self.input, self.target)


@dataclass
class GradientSchedule:
    """Objective gradient laid out like the coefficient schedule."""

    dt: float
    grad_a: np.ndarray
    grad_b: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.grad_a.ravel(), self.grad_b.ravel()])

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grad_a**2) + np.sum(self.grad_b**2)))


def regularization_weights(value, count: int = INVARIANT_COUNT) -> np.ndarray:
    """Expand a scalar or length-17 sequence into a weight vector."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(count, float(arr))
    if arr.shape != (count,):
        raise ValueError(f"expected scalar or {count} weights, got shape {arr.shape}")
    if not np.all(arr > 0):
        raise ValueError("regularization weights must be positive")
    return arr


def _solve_pairs(worker, pairs, threads):
    """Run one solve per pair, returning results in manifest order."""
    if threads and threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, pairs))
    return [worker(p) for p in pairs]


def evaluate(pairs, sched: CoefficientSchedule, lam, mu, threads: int = 1):
    """Objective value and the forward trajectories for gradient reuse.

    A forward blow-up on any pair yields (inf, None), which the line
    search treats as an infinitely bad probe.
    """
    lam = regularization_weights(lam)
    mu = regularization_weights(mu)
    try:
        trajectories = _solve_pairs(lambda p: evolve(p.input, sched), pairs, threads)
    except BlowUpError:
        return math.inf, None
    tracking = 0.0
    for pair, traj in zip(pairs, trajectories):
        diff = traj.final().interior - pair.target.interior
        tracking += 0.5 * float((diff * diff).sum()) / diff.size
    reg_a = 0.5 * sched.dt * float(lam @ (sched.a**2).sum(axis=0))
    reg_b = 0.5 * sched.dt * float(mu @ (sched.b**2).sum(axis=0))
    return tracking + reg_a + reg_b, trajectories


def gradient(
    pairs,
    sched: CoefficientSchedule,
    lam,
    mu,
    trajectories,
    threads: int = 1,
) -> GradientSchedule:
    """Adjoint-based gradient of the objective for every schedule entry.

    The cross-sample sum runs in manifest order regardless of the worker
    count, so results are deterministic.
    """
    lam = regularization_weights(lam)
    mu = regularization_weights(mu)
    if trajectories is None or len(trajectories) != len(pairs):
        raise ValueError("gradient needs one stored trajectory per pair")
    grad_a = sched.a * lam
    grad_b = sched.b * mu

    def correlations(pair_traj):
        pair, traj = pair_traj
        final = traj.final()
        residual = final.with_values(pair.target.values - final.values)
        adj = solve_adjoint(traj, sched, residual)
        pad = final.pad
        n_px = final.width * final.height
        corr_a = np.empty((sched.steps, INVARIANT_COUNT))
        corr_b = np.empty((sched.steps, INVARIANT_COUNT))
        for i in range(sched.steps):
            stack = compute_invariants(
                derivatives(traj.u_states[i]), derivatives(traj.v_states[i])
            )
            s = stack.data[:, pad:-pad, pad:-pad].reshape(INVARIANT_COUNT, -1)
            phi = adj.phi_states[i + 1].interior.ravel()
            psi = adj.psi_states[i + 1].interior.ravel()
            corr_a[i] = s @ phi / n_px
            corr_b[i] = (s @ psi / n_px)[SWAP]
        return corr_a, corr_b

    results = _solve_pairs(correlations, list(zip(pairs, trajectories)), threads)
    for corr_a, corr_b in results:
        grad_a -= corr_a
        grad_b -= corr_b
    return GradientSchedule(sched.dt, grad_a, grad_b)


# Entries whose adjoint and finite-difference estimates are both below this
# magnitude are treated as exact zeros when computing relative error.
GRADCHECK_ZERO = 1e-8


def relative_error(adjoint_value: float, fd_value: float) -> float:
    scale = max(abs(adjoint_value), abs(fd_value))
    if scale <= GRADCHECK_ZERO:
        return 0.0
    return abs(adjoint_value - fd_value) / scale


def gradient_check(
    pairs,
    sched: CoefficientSchedule,
    lam,
    mu,
    n_entries: int = 50,
    eps: float = 1e-5,
    seed: int = 0,
    threads: int = 1,
    indices=None,
):
    """Compare the adjoint gradient to central finite differences of J.

    Samples schedule entries (seeded, without replacement, spanning the a
    and b blocks) unless explicit flat `indices` are given.  The adjoint
    gradient holds the per-unit-time derivative, so each entry is scaled by
    dt before comparison with the discrete partial derivative.  Returns
    (worst_relative_error, rows) with one (index, adjoint, fd, rel) row per
    sampled entry.
    """
    lam = regularization_weights(lam)
    mu = regularization_weights(mu)
    base_j, trajectories = evaluate(pairs, sched, lam, mu, threads)
    if trajectories is None:
        raise BlowUpError(math.inf)
    grad_vec = gradient(pairs, sched, lam, mu, trajectories, threads).as_vector()
    vec = sched.as_vector()
    total = vec.size
    if indices is None:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(total, size=min(n_entries, total), replace=False)
        chosen = np.sort(chosen)
    else:
        chosen = np.asarray(indices, dtype=int)
    rows = []
    worst = 0.0
    for idx in chosen:
        plus = vec.copy()
        minus = vec.copy()
        plus[idx] += eps
        minus[idx] -= eps
        j_plus, _ = evaluate(pairs, sched.from_vector(plus), lam, mu, threads)
        j_minus, _ = evaluate(pairs, sched.from_vector(minus), lam, mu, threads)
        fd = (j_plus - j_minus) / (plus[idx] - minus[idx])
        adj = sched.dt * grad_vec[idx]
        rel = relative_error(adj, fd)
        rows.append((int(idx), adj, fd, rel))
        worst = max(worst, rel)
    return worst, rows
