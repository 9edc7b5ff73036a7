"""Training loop: heuristic initialization, conjugate gradient, golden search.

The whole parameter vector (all a rows, then all b rows) is searched
jointly: one Polak-Ribiere+ direction and one golden-section line search
per iteration, with periodic restarts and a monotone objective sequence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fields import time_steps
from .forward_solver import BlowUpError, CoefficientSchedule, step
from .invariants import INVARIANT_COUNT, compute_invariants
from .fields import derivatives
from .objective import evaluate, gradient, regularization_weights

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0

INIT_DAMPING = 1e-8


class InitializationError(RuntimeError):
    """The control initialization could not solve its least-squares system."""


@dataclass
class TrainerConfig:
    dt: float = 0.02
    lam: float = 1e-4
    mu: float = 1e-4
    max_iters: int = 200
    rel_tol: float = 1e-5
    grad_tol: float = 1e-6
    bracket_max: float = 1.0
    golden_tol: float = 1e-3
    restart_period: int = 25
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.max_iters <= 0 or self.bracket_max <= 0:
            raise ValueError("dt, max_iters and bracket_max must be positive")
        if not (0 < self.rel_tol < 1 and 0 < self.golden_tol < 1):
            raise ValueError("rel_tol and golden_tol must lie in (0, 1)")
        if self.grad_tol <= 0 or self.restart_period <= 0:
            raise ValueError("grad_tol and restart_period must be positive")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    grad_norm: float
    alpha: float
    elapsed: float

    def format(self) -> str:
        return (
            f"iter={self.iteration:4d} J={self.objective:.10e} "
            f"grad={self.grad_norm:.4e} alpha={self.alpha:.6f} "
            f"elapsed={self.elapsed:.2f}s"
        )


@dataclass
class TrainingReport:
    iterations: list
    schedule: CoefficientSchedule
    termination: str

    @property
    def objectives(self):
        return [rec.objective for rec in self.iterations]


def initialize(pairs, dt: float, damping: float = INIT_DAMPING) -> CoefficientSchedule:
    """Heuristic control initialization, one least-squares fit per step.

    At each step the desired velocity (target - current) / (1 - t) is
    projected onto the invariant span by damped normal equations, b stays
    zero, and every sample advances one forward step with the fitted row.
    """
    if not pairs:
        raise ValueError("initialization needs at least one training pair")
    steps = time_steps(dt)
    a_rows = np.zeros((steps, INVARIANT_COUNT))
    zero_b = np.zeros(INVARIANT_COUNT)
    states = [(p.input, p.input) for p in pairs]
    for i in range(steps):
        remaining = 1.0 - i * dt
        gram = np.zeros((INVARIANT_COUNT, INVARIANT_COUNT))
        rhs_vec = np.zeros(INVARIANT_COUNT)
        for (u, v), pair in zip(states, pairs):
            stack = compute_invariants(derivatives(u), derivatives(v))
            pad = u.pad
            s = stack.data[:, pad:-pad, pad:-pad].reshape(INVARIANT_COUNT, -1)
            d = (pair.target.interior - u.interior).ravel() / remaining
            n_px = d.size
            gram += (s @ s.T) / n_px
            rhs_vec += (s @ d) / n_px
        system = gram + damping * np.eye(INVARIANT_COUNT)
        try:
            a_rows[i] = np.linalg.solve(system, rhs_vec)
        except np.linalg.LinAlgError as err:
            raise InitializationError(
                f"normal equations are singular at step {i} despite damping"
            ) from err
        try:
            states = [step(u, v, a_rows[i], zero_b, dt) for (u, v) in states]
        except BlowUpError as err:
            raise BlowUpError(err.magnitude, time_index=i) from None
    return CoefficientSchedule(
        dt, a_rows, np.zeros((steps, INVARIANT_COUNT))
    )


def golden_search(line_fn, lo: float, hi: float, tol: float) -> float:
    """Golden-section minimization over [lo, hi] to within tol.

    line_fn must be total on the bracket; +inf probes are legal and mark
    blow-up regions.  Returns the best probed point, or 0.0 if every probe
    was infinite.  Ties shrink toward lo, so monotone and all-infinite
    functions resolve to the lower end.
    """
    if not lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = hi - lo
    best_x = lo
    best_f = math.inf
    c = lo + _INVPHI2 * h
    d = lo + _INVPHI * h
    fc = line_fn(c)
    fd = line_fn(d)
    if fc < best_f:
        best_x, best_f = c, fc
    if fd < best_f:
        best_x, best_f = d, fd
    n = max(0, math.ceil(math.log(tol / h) / math.log(_INVPHI))) if h > tol else 0
    for _ in range(n):
        if fc <= fd:
            hi = d
            d, fd = c, fc
            h *= _INVPHI
            c = lo + _INVPHI2 * h
            fc = line_fn(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            lo = c
            c, fc = d, fd
            h *= _INVPHI
            d = lo + _INVPHI * h
            fd = line_fn(d)
            if fd < best_f:
                best_x, best_f = d, fd
    if math.isinf(best_f):
        return 0.0
    return best_x


def train(pairs, config: TrainerConfig, log=None) -> TrainingReport:
    """Full optimization per the training algorithm; J never increases.

    `log` is called with one formatted line per accepted iteration.
    """
    t0 = time.perf_counter()
    lam = regularization_weights(config.lam)
    mu = regularization_weights(config.mu)

    def emit(record):
        if log is not None:
            log(record.format())

    sched = initialize(pairs, config.dt)
    current_j, trajectories = evaluate(pairs, sched, lam, mu, config.threads)
    if trajectories is None:
        raise BlowUpError(math.inf)
    grad = gradient(pairs, sched, lam, mu, trajectories, config.threads)
    g_vec = grad.as_vector()
    g_norm = float(np.linalg.norm(g_vec))

    records = [IterationRecord(0, current_j, g_norm, 0.0, time.perf_counter() - t0)]
    emit(records[0])

    termination = "max iterations reached"
    direction = -g_vec
    for it in range(1, config.max_iters + 1):
        if g_norm < config.grad_tol:
            termination = "gradient norm below tolerance"
            break

        if np.dot(direction, g_vec) >= 0.0:
            # Not a descent direction; fall back to steepest descent.
            direction = -g_vec

        base = sched.as_vector()

        def line_fn(alpha):
            trial = sched.from_vector(base + alpha * direction)
            value, _ = evaluate(pairs, trial, lam, mu, config.threads)
            return value

        alpha = golden_search(line_fn, 0.0, config.bracket_max, config.golden_tol)
        if alpha == 0.0:
            termination = "line search found no finite step"
            break
        trial = sched.from_vector(base + alpha * direction)
        trial_j, trial_traj = evaluate(pairs, trial, lam, mu, config.threads)
        if not trial_j < current_j:
            termination = "line search made no progress"
            break

        sched = trial
        trajectories = trial_traj
        rel_decrease = (current_j - trial_j) / max(abs(current_j), 1e-300)
        current_j = trial_j

        prev_g = g_vec
        grad = gradient(pairs, sched, lam, mu, trajectories, config.threads)
        g_vec = grad.as_vector()
        g_norm = float(np.linalg.norm(g_vec))

        records.append(
            IterationRecord(it, current_j, g_norm, alpha, time.perf_counter() - t0)
        )
        emit(records[-1])

        if rel_decrease < config.rel_tol:
            termination = "relative decrease below tolerance"
            break

        if it % config.restart_period == 0:
            beta = 0.0
        else:
            denom = float(np.dot(prev_g, prev_g))
            beta = max(0.0, float(np.dot(g_vec, g_vec - prev_g)) / denom) if denom > 0 else 0.0
        direction = -g_vec + beta * direction

    return TrainingReport(records, sched, termination)
