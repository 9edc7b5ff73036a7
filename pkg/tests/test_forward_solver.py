import numpy as np
import pytest

from pdelearn.dataset_io import diffuse
from pdelearn.fields import pad, rotate90, shift_interior
from pdelearn.forward_solver import (
    BLOWUP_BOUND,
    BlowUpError,
    CoefficientSchedule,
    evolve,
    rhs,
    step,
)
from pdelearn.invariants import INVARIANT_COUNT

from conftest import analytic_field, smooth_blob_array


def unit_row(j, value=1.0):
    row = np.zeros(INVARIANT_COUNT)
    row[j] = value
    return row


ZERO = np.zeros(INVARIANT_COUNT)


class TestSchedule:
    def test_zeros_builder(self):
        s = CoefficientSchedule.zeros(0.25)
        assert s.steps == 4
        assert np.all(s.a == 0.0) and np.all(s.b == 0.0)

    def test_step_count_must_match_dt(self):
        with pytest.raises(ValueError):
            CoefficientSchedule(0.25, np.zeros((3, 17)), np.zeros((3, 17)))

    def test_finite_required(self):
        a = np.zeros((4, 17))
        a[0, 0] = np.nan
        with pytest.raises(ValueError):
            CoefficientSchedule(0.25, a, np.zeros((4, 17)))

    def test_vector_round_trip(self):
        rng = np.random.default_rng(0)
        s = CoefficientSchedule(0.25, rng.normal(size=(4, 17)), rng.normal(size=(4, 17)))
        t = s.from_vector(s.as_vector())
        assert np.array_equal(s.a, t.a) and np.array_equal(s.b, t.b)

    def test_constant_builder(self):
        s = CoefficientSchedule.constant(0.5, unit_row(7, 0.5))
        assert s.steps == 2
        assert np.all(s.a[:, 7] == 0.5)
        assert np.all(s.b == 0.0)


class TestRhs:
    def test_all_zero_coefficients(self):
        f = pad(smooth_blob_array(8, 8, seed=1), 2)
        fu, fv = rhs(f, f, ZERO, ZERO)
        assert np.all(fu.values == 0.0)
        assert np.all(fv.values == 0.0)

    def test_constant_source_only(self):
        f = pad(smooth_blob_array(8, 8, seed=1), 2)
        fu, fv = rhs(f, f, unit_row(0), ZERO)
        assert np.all(fu.interior == 1.0)
        assert np.all(fv.values == 0.0)
        halo_mask = np.ones(fu.values.shape, dtype=bool)
        halo_mask[2:-2, 2:-2] = False
        assert np.all(fu.values[halo_mask] == 0.0)

    def test_heat_term_on_paraboloid(self):
        f = analytic_field(lambda x, y: x * x + y * y, height=9, width=9)
        fu, _ = rhs(f, f, unit_row(7), ZERO)
        # Away from the halo the Hessian trace of x^2 + y^2 is exactly 4.
        assert np.all(fu.values[3:-3, 3:-3] == 4.0)

    def test_indicator_side_uses_swapped_arguments(self):
        u = pad(smooth_blob_array(8, 8, seed=4), 2)
        v = pad(smooth_blob_array(8, 8, seed=5), 2)
        # b = e_2 weights inv_2(v, u) = v, not u.
        _, fv = rhs(u, v, ZERO, unit_row(2))
        assert np.array_equal(fv.interior, v.interior)

    def test_coefficient_row_length_enforced(self):
        f = pad(smooth_blob_array(8, 8, seed=1), 2)
        with pytest.raises(ValueError):
            rhs(f, f, np.zeros(16), ZERO)
        with pytest.raises(ValueError):
            rhs(f, f, ZERO, np.zeros(18))


class TestStep:
    def test_zero_coefficients_identity(self):
        f = pad(smooth_blob_array(8, 8, seed=2), 2)
        u, v = step(f, f, ZERO, ZERO, 0.1)
        assert np.array_equal(u.values, f.values)
        assert np.array_equal(v.values, f.values)

    def test_constant_source_step(self):
        f = pad(np.zeros((6, 6)), 2)
        u, _ = step(f, f, unit_row(0), ZERO, 0.1)
        assert np.all(u.interior == 0.1)
        assert np.all(u.values[:2, :] == 0.0)

    def test_blow_up_is_signalled(self):
        f = pad(np.full((6, 6), 0.5), 2)
        with pytest.raises(BlowUpError) as exc:
            step(f, f, unit_row(0, 1000.0), ZERO, 0.1)
        assert exc.value.magnitude > BLOWUP_BOUND
        assert np.isfinite(exc.value.magnitude)


class TestEvolve:
    def test_zero_schedule_returns_input(self):
        f = pad(smooth_blob_array(10, 10, seed=3), 2)
        traj = evolve(f, CoefficientSchedule.zeros(0.25))
        assert len(traj.u_states) == 5
        assert np.array_equal(traj.final().values, f.values)

    def test_constant_source_integrates_to_one(self):
        # Dyadic pixel values keep every partial sum exact, so four +0.25
        # steps reproduce image + 1 bit for bit.
        img = np.round(smooth_blob_array(8, 8, seed=6) * 128) / 256.0
        f = pad(img, 2)
        traj = evolve(f, CoefficientSchedule.constant(0.25, unit_row(0)))
        assert np.array_equal(traj.final().interior, img + 1.0)

    def test_matches_independent_heat_stepper(self):
        img = smooth_blob_array(16, 16, seed=7)
        f = pad(img, 2)
        sched = CoefficientSchedule.constant(0.01, unit_row(7, 0.5))
        traj = evolve(f, sched)
        oracle = diffuse(img, 0.5, 1.0, 0.01)
        assert np.max(np.abs(traj.final().interior - oracle)) <= 1e-12

    def test_blow_up_carries_time_index(self):
        f = pad(np.full((6, 6), 0.5), 2)
        sched = CoefficientSchedule.constant(0.25, unit_row(0, 30.0))
        with pytest.raises(BlowUpError) as exc:
            evolve(f, sched)
        assert exc.value.time_index == 1

    def test_determinism(self):
        img = smooth_blob_array(12, 12, seed=8)
        rng = np.random.default_rng(1)
        sched = CoefficientSchedule(
            0.125,
            rng.uniform(-0.2, 0.2, size=(8, 17)),
            rng.uniform(-0.2, 0.2, size=(8, 17)),
        )
        t1 = evolve(pad(img, 2), sched)
        t2 = evolve(pad(img, 2), sched)
        for s1, s2 in zip(t1.u_states + t1.v_states, t2.u_states + t2.v_states):
            assert np.array_equal(s1.values, s2.values)


class TestEquivariance:
    def _random_schedule(self, dt, amp=0.15, seed=2):
        rng = np.random.default_rng(seed)
        n = int(round(1.0 / dt))
        return CoefficientSchedule(
            dt,
            rng.uniform(-amp, amp, size=(n, 17)),
            rng.uniform(-amp, amp, size=(n, 17)),
        )

    def test_translation_equivariance_exact_outside_band(self):
        content = smooth_blob_array(10, 10, seed=10)
        img = np.zeros((32, 32))
        img[11:21, 11:21] = content
        f = pad(img, 2)
        sched = self._random_schedule(0.125)
        dx, dy = 2, -1
        shifted_then_evolved = evolve(shift_interior(f, dx, dy), sched).final()
        evolved_then_shifted = shift_interior(evolve(f, sched).final(), dx, dy)
        # The halo influence travels one node per step; add the shift and
        # one spare node, then require bitwise equality inside.
        band = sched.steps + max(abs(dx), abs(dy)) + 1
        p = f.pad
        inner = (slice(p + band, -(p + band)), slice(p + band, -(p + band)))
        assert np.array_equal(
            shifted_then_evolved.values[inner], evolved_then_shifted.values[inner]
        )

    def test_rotation_equivariance(self):
        img = smooth_blob_array(16, 16, seed=11)
        f = pad(img, 2)
        sched = self._random_schedule(0.125, seed=3)
        rot_then_evolve = evolve(rotate90(f), sched).final()
        evolve_then_rot = rotate90(evolve(f, sched).final())
        assert np.max(np.abs(rot_then_evolve.values - evolve_then_rot.values)) <= 1e-12


class TestConsistency:
    def test_first_order_convergence_in_dt(self):
        img = smooth_blob_array(16, 16, seed=12)

        def smooth_row(t):
            row = np.zeros(17)
            row[7] = 0.3 + 0.2 * np.sin(2 * np.pi * t)
            row[0] = 0.1 * np.cos(2 * np.pi * t)
            return row

        def run(dt):
            n = int(round(1.0 / dt))
            a = np.stack([smooth_row(i * dt) for i in range(n)])
            sched = CoefficientSchedule(dt, a, np.zeros((n, 17)))
            return evolve(pad(img, 2), sched).final().interior

        ref = run(1e-4)
        dts = [0.1, 0.05, 0.025, 0.0125]
        errs = [np.max(np.abs(run(dt) - ref)) for dt in dts]
        slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
        assert 0.8 <= slope <= 1.2, (slope, errs)
