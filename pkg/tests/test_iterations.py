import numpy as np
import pytest

from bregfix import core, mappings as mp
from bregfix import iterations as it
from bregfix.core import Box
from bregfix.errors import ConfigError, DomainError, ScheduleError
from bregfix.experiments import GOLDEN_TABLE1, section6_config

UNIT = Box.cube(-1, 1)
FIFTH = mp.scaling(0.2, UNIT)
HALF = it.constant_schedule(0.5, 0.5, 0.5)
QUAD = core.section6_quadratic()


def cfg(scheme, x1=1.0, schedule=HALF, t=FIFTH, c=UNIT, **kw):
    return it.IterationConfig(scheme=scheme, t=t, c=c, x1=[x1], schedule=schedule, **kw)


class TestHandValues:
    def test_ishikawa_first_step(self):
        r = it.run(cfg("ishikawa", max_iter=1)).rows[0]
        assert r.z is None
        assert r.y[0] == pytest.approx(0.6, abs=1e-15)
        assert r.x_next[0] == pytest.approx(0.56, abs=1e-15)

    def test_noor_first_step(self):
        r = it.run(cfg("noor", max_iter=1)).rows[0]
        assert [r.z[0], r.y[0], r.x_next[0]] == pytest.approx([0.6, 0.56, 0.556], abs=1e-15)

    def test_bregman_noor_quadratic(self):
        r = it.run(cfg("bregman_noor", bf=QUAD, max_iter=1)).rows[0]
        assert [r.z[0], r.y[0], r.x_next[0]] == pytest.approx([0.6, 0.56, 0.556], abs=1e-14)

    def test_bregman_noor_quartic(self):
        c = Box.cube(0, 0.9)
        r = it.run(cfg("bregman_noor", x1=0.5, t=mp.square(c), c=c, bf=core.quartic(), max_iter=1)).rows[0]
        assert r.z[0] == pytest.approx(0.41274090611182834, abs=1e-12)
        assert r.y[0] == pytest.approx(0.4020146769641293, abs=1e-12)
        assert r.x_next[0] == pytest.approx(0.40126821533135865, abs=1e-12)

    def test_halpern_rows(self):
        rows = it.run(section6_config()).rows
        for k in (0, 1, 41):
            r, g = rows[k], GOLDEN_TABLE1[k]
            assert [r.z[0], r.y[0], r.x_next[0], r.step_norm] == pytest.approx(g[1:], abs=1e-6)

    def test_halpern_primal_z_differs(self):
        c = section6_config(max_iter=1)
        c.z_space = "primal"
        assert it.run(c).rows[0].z[0] == pytest.approx(-0.48, abs=1e-15)


class TestClosedForm:
    def test_matches_engine(self):
        trace = it.run(section6_config())
        for r in trace.rows:
            z, y, xn = it.closed_form_section6_step(r.n, r.x[0], 0.1)
            assert abs(z - r.z[0]) <= 1e-12
            assert abs(y - r.y[0]) <= 1e-12
            assert abs(xn - r.x_next[0]) <= 1e-12

    def test_row_ten(self):
        x = -0.8
        for n in range(1, 11):
            z, y, x_next = it.closed_form_section6_step(n, x, 0.1)
            x = x_next
        assert [z, y, x] == pytest.approx(GOLDEN_TABLE1[9, 1:4], abs=1e-7)

    def test_index_starts_at_one(self):
        with pytest.raises(ValueError):
            it.closed_form_section6_step(0, 0.1, 0.1)


class TestEngineBehaviour:
    @pytest.mark.parametrize("scheme", ["ishikawa", "noor", "bregman_noor"])
    def test_fixed_point_absorbs(self, scheme):
        trace = it.run(cfg(scheme, x1=0.0, bf=QUAD, max_iter=5))
        assert np.all(trace.iterates() == 0.0)

    def test_halpern_anchor_at_fixed_point(self):
        trace = it.run(cfg("bregman_halpern", x1=0.0, bf=QUAD, anchor_u=[0.0],
                           schedule=it.section6_schedule(), max_iter=5))
        assert np.all(trace.iterates() == 0.0)

    @pytest.mark.parametrize("scheme", it.SCHEMES)
    def test_stays_in_box(self, scheme):
        c = Box.cube(0, 0.9)
        trace = it.run(cfg(scheme, x1=0.9, t=mp.square(c), c=c, bf=core.quartic(),
                           anchor_u=[0.9], max_iter=30))
        xs = trace.iterates()
        assert xs.min() >= 0 and xs.max() <= 0.9

    def test_replay_is_bitwise(self):
        a = it.run(section6_config()).iterates()
        b = it.run(section6_config()).iterates()
        assert np.array_equal(a, b)

    def test_stop_tol(self):
        trace = it.run(cfg("noor", stop_tol=1e-6, max_iter=1000))
        assert trace.terminated_reason == "step_tol"
        assert trace.rows[-1].step_norm <= 1e-6 < trace.rows[-2].step_norm

    def test_runs_to_max_iter_by_default(self):
        trace = it.run(cfg("noor", max_iter=200))
        assert len(trace) == 200 and trace.terminated_reason == "max_iter"

    def test_residual_decays(self):
        res = it.run(cfg("noor", max_iter=50)).column("residual")[:, 0]
        assert res[-1] < 1e-10 < res[0]

    def test_csv_round_trip(self, tmp_path):
        trace = it.run(section6_config())
        short, full = trace.write_csv(tmp_path)
        back = it.read_trace_csv(full)
        assert len(back) == 42
        for r, b in zip(trace.rows, back):
            assert b["n"] == r.n
            assert b["x"][0] == r.x_next[0] and b["z"][0] == r.z[0]
        shown = it.read_trace_csv(short)
        got = np.array([[b["z"][0], b["y"][0], b["x"][0], b["step_diff"][0]] for b in shown])
        assert np.max(np.abs(got - GOLDEN_TABLE1[:, 1:])) <= 1e-6

    def test_ishikawa_csv_has_empty_z(self, tmp_path):
        short, _ = it.run(cfg("ishikawa", max_iter=3)).write_csv(tmp_path)
        assert all(b["z"] is None for b in it.read_trace_csv(short))

    def test_vector_iterates(self):
        c = Box.cube(-1, 1, 2)
        t = mp.affine(0.5, 0.0, c)
        trace = it.IterationConfig("noor", t, c, [1.0, -1.0], HALF, max_iter=3)
        rows = it.run(trace).rows
        assert rows[0].x_next == pytest.approx([0.671875, -0.671875], abs=1e-15)


class TestConfigErrors:
    def test_unknown_scheme(self):
        with pytest.raises(ConfigError):
            cfg("mann")

    def test_x1_outside(self):
        with pytest.raises(DomainError):
            cfg("noor", x1=2.0)

    def test_anchor_outside(self):
        with pytest.raises(DomainError):
            cfg("bregman_halpern", bf=QUAD, anchor_u=[3.0])

    def test_halpern_needs_anchor(self):
        with pytest.raises(ConfigError):
            cfg("bregman_halpern", bf=QUAD)

    def test_bregman_needs_inverse_gradient(self):
        with pytest.raises(ConfigError):
            cfg("bregman_noor", bf=core.linear([1.0]))

    def test_bad_z_space(self):
        with pytest.raises(ConfigError):
            cfg("bregman_noor", bf=QUAD, z_space="mixed")

    def test_schedule_value_one(self):
        with pytest.raises(ScheduleError):
            it.run(cfg("noor", schedule=it.constant_schedule(0.5, 1.0, 0.5)))

    def test_schedule_negative_array(self):
        with pytest.raises(ScheduleError):
            it.constant_schedule(-0.1, 0.5, 0.5).arrays(10)

    def test_mapping_escaping_domain(self):
        t = mp.affine(3.0, 0.0, Box.cube(-1, 1))
        with pytest.raises(DomainError):
            it.run(cfg("ishikawa", x1=0.9, t=t, c=Box.cube(-10, 10)))

    def test_defaults(self):
        assert cfg("bregman_noor", bf=QUAD).z_space == "primal"
        assert section6_config().z_space == "dual"
        assert cfg("noor").ref_orientation == "ref_second"


class TestControlConditions:
    def test_section6(self):
        r = it.check_control_conditions(it.section6_schedule(), 100_000)
        assert r.gamma_to_zero and r.gamma_sum_increasing and r.gamma_sum_divergent
        assert r.noor_sum_divergent and r.halpern_conditions
        assert 0.2 < r.beta_liminf <= r.beta_limsup < 0.2001

    def test_constant_gamma_not_to_zero(self):
        r = it.check_control_conditions(HALF, 10_000)
        assert not r.gamma_to_zero and r.gamma_sum_divergent and r.beta_bounds

    def test_summable_gamma(self):
        r = it.check_control_conditions(it.harmonic_schedule(0.5, 0.5, 1.0, 2.0), 100_000)
        assert r.gamma_to_zero and not r.gamma_sum_divergent
        assert r.gamma_sum == pytest.approx(np.pi ** 2 / 6 - 1, abs=1e-4)

    def test_horizon_too_short(self):
        with pytest.raises(ValueError):
            it.check_control_conditions(HALF, 10)


class TestFejer:
    @pytest.mark.parametrize("scheme", ["ishikawa", "noor"])
    def test_primal_schemes_monotone(self, scheme):
        trace = it.run(cfg(scheme, max_iter=100))
        rep = it.check_fejer_monotonicity(trace, QUAD, [0.0])
        assert rep.monotone and not rep.violations

    def test_bregman_noor_quartic(self):
        c = Box.cube(0, 0.9)
        trace = it.run(cfg("bregman_noor", x1=0.9, t=mp.square(c), c=c, bf=core.quartic(), max_iter=40))
        rep = it.check_fejer_monotonicity(trace, core.quartic(), [0.0], "ref_first")
        assert rep.monotone and not rep.violations

    def test_halpern_profile(self):
        # the anchor pulls the iterates past 0 towards u, so distances stop shrinking late in the run
        trace = it.run(section6_config())
        rep = it.check_fejer_monotonicity(trace, QUAD, [0.0], "ref_first")
        d = rep.distances
        assert np.all(np.diff(d[:35]) < 0)
        assert d[35:].max() <= 1e-8
        assert rep.monotone
        strict = it.check_fejer_monotonicity(trace, QUAD, [0.0], "ref_first", tol=0.0)
        assert strict.violations and min(strict.violations) >= 36

    def test_ref_must_be_fixed(self):
        trace = it.run(cfg("noor", max_iter=3))
        with pytest.raises(ValueError):
            it.check_fejer_monotonicity(trace, QUAD, [0.5])


class TestAsymptoticRadius:
    def test_halpern_tail(self):
        tail = it.run(section6_config()).iterates()[-3:]
        r0 = it.asymptotic_radius_estimate(QUAD, tail, [0.0])
        assert r0 <= 2e-10
        assert r0 < it.asymptotic_radius_estimate(QUAD, tail, [0.5])

    def test_empty_tail(self):
        with pytest.raises(ValueError):
            it.asymptotic_radius_estimate(QUAD, [], [0.0])
