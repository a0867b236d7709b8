import warnings

import numpy as np
import pytest

from nlsgpc.errors import DetectionError, ValidationError, WrapAroundWarning
from nlsgpc.gpc import (
    BracketWarning,
    chaos_coefficients,
    convergence_study,
    critical_velocity,
    detect_separation,
    energy_ratio,
    ensemble_variance,
    mean_mode,
    reconstruct,
    run_ensemble,
)
from nlsgpc.grid import Grid, WaveField
from nlsgpc.models import PdeModel, StepSurrogate
from nlsgpc.quadrature import gauss_rule
from nlsgpc.soliton import DefectParams, SolitonParams
from nlsgpc.ssfm import SolverConfig


def free_model(eps=0.0, n_points=1024, dt=0.01):
    return PdeModel(Grid(40.0, n_points), DefectParams(eps), SolitonParams(position=-20.0),
                    SolverConfig(dt=dt))


@pytest.fixture(scope="module")
def free_ensemble():
    rule = gauss_rule("legendre", 5).on_interval(0.5, 0.8)
    return run_ensemble(rule, free_model())


def test_single_node_mean_is_the_field():
    g = Grid(40.0, 512)
    rule = gauss_rule("legendre", 1).on_interval(0.05, 0.15)
    e = run_ensemble(rule, StepSurrogate(g, 0.2))
    np.testing.assert_array_equal(mean_mode(e).values, e.fields[0])


def test_mean_of_identical_fields(rng):
    g = Grid(10.0, 64)
    f = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    rule = gauss_rule("hermite", 7)
    c = chaos_coefficients(rule, np.tile(f, (7, 1)))
    np.testing.assert_allclose(c[0], f, atol=1e-14)
    assert np.max(np.abs(c[1:])) < 1e-13


def test_two_node_mean(rng):
    f, g = rng.standard_normal((2, 32)) + 0j
    c = chaos_coefficients(gauss_rule("legendre", 2), np.array([f, g]))
    np.testing.assert_allclose(c[0], (f + g) / 2, atol=1e-15)


def test_free_ensemble_is_all_transmitted(free_ensemble):
    e = free_ensemble
    assert set(e.outcomes) == {"transmitted"}
    # clearance of the slowest node, which sits inside the interval
    assert e.t_final == pytest.approx(30 / e.velocities.min(), rel=1e-6)
    with pytest.warns(BracketWarning):
        res = critical_velocity(e)
    assert res.ratio < 1e-6
    assert res.v_c == pytest.approx(0.5, abs=1e-6)
    assert not res.bracketed


def test_reconstruct_at_node_in_smooth_case(free_ensemble):
    e = free_ensemble
    j = 2
    r = reconstruct(e, float(e.velocities[j]))
    err = np.max(np.abs(r.values - e.fields[j])) / np.max(np.abs(e.fields[j]))
    assert err < 1e-8
    with pytest.raises(ValidationError):
        reconstruct(e, 0.9)


def test_reconstruct_single_node():
    g = Grid(40.0, 512)
    e = run_ensemble(gauss_rule("legendre", 1).on_interval(0.05, 0.15), StepSurrogate(g, 0.1))
    np.testing.assert_array_equal(reconstruct(e, 0.07).values, e.coefficients[0])


def test_surrogate_mean_has_two_groups():
    g = Grid(40.0, 2048)
    e = run_ensemble(gauss_rule("legendre", 8).on_interval(0.05, 0.15), StepSurrogate(g, 0.1))
    amp = mean_mode(e).modulus()
    assert g.x[np.argmax(amp)] == 0.0 or g.x[np.argmax(amp)] == 20.0
    assert amp[g.origin_index] > 0.3 and amp[np.searchsorted(g.x, 20.0)] > 0.3
    assert ensemble_variance(e).max() > 0


def test_detect_single_peak():
    g = Grid(40.0, 2048)
    mean = WaveField(g, 1 / np.cosh(g.x))
    lp = detect_separation(mean)
    # first point right of the peak where sech drops below 1e-3
    assert lp == pytest.approx(g.x[np.argmax((g.x > 0) & (1 / np.cosh(g.x) < 1e-3))])
    assert mean.modulus()[g.x > lp].max() < 1e-3


def test_detect_between_two_groups():
    g = Grid(40.0, 2048)
    mean = WaveField(g, 1 / np.cosh(g.x) + 0.5 / np.cosh(g.x - 25))
    lp = detect_separation(mean)
    assert 5 < lp < 12
    _, _, r = energy_ratio(mean, lp)
    e_far = 0.5 * np.sum(np.abs(mean.values[g.x > lp]) ** 2) * g.dx
    assert 1 - r == pytest.approx(e_far / (0.5 * np.sum(mean.density()) * g.dx))
    assert detect_separation(mean, manual=17.0) == 17.0


def test_detect_failure():
    g = Grid(40.0, 256)
    with pytest.raises(DetectionError):
        detect_separation(WaveField(g, np.ones(256)))
    with pytest.raises(DetectionError):
        detect_separation(WaveField(g, np.zeros(256)))


def test_energy_ratio_limits():
    g = Grid(40.0, 2048)
    left = WaveField(g, 1 / np.cosh(g.x + 10))
    right = WaveField(g, 1 / np.cosh(g.x - 25))
    assert energy_ratio(left, 10.0)[2] == pytest.approx(1.0, abs=1e-12)
    assert energy_ratio(right, 10.0)[2] == pytest.approx(0.0, abs=1e-12)
    both = WaveField(g, left.values + right.values)
    assert abs(energy_ratio(both, 10.0)[2] - 0.5) < 1e-6
    with pytest.raises(ValidationError):
        energy_ratio(both, 45.0)


def _surrogate_result(threshold):
    g = Grid(40.0, 2048)
    e = run_ensemble(gauss_rule("legendre", 6).on_interval(0.05, 0.15), StepSurrogate(g, threshold))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BracketWarning)
        return critical_velocity(e)


def test_ratio_endpoints_map_to_interval():
    # every node transmitted: R = 0, V_c = V_a; every node trapped: R = 1, V_c = V_b
    lo = _surrogate_result(0.01)
    hi = _surrogate_result(1.0)
    assert lo.ratio == pytest.approx(0.0, abs=1e-12) and lo.v_c == pytest.approx(0.05)
    # L' starts where |u0| < 1e-3 of the peak, so the cut tail holds ~(1e-3)^2 of the energy
    assert hi.ratio == pytest.approx(1.0, abs=1e-6) and hi.v_c == pytest.approx(0.15)


def test_critical_record_schema():
    rec = _surrogate_result(0.1).record()
    for key in ("epsilon", "V_a", "V_b", "N", "L_prime", "E_L", "E_Lprime", "R", "V_c",
                "wall_time_s"):
        assert key in rec
    assert rec["wall_time_s"] is None


def test_surrogate_ratio_is_quadrature_mass():
    g = Grid(40.0, 2048)
    rule = gauss_rule("legendre", 10).on_interval(0.05, 0.15)
    res = critical_velocity(run_ensemble(rule, StepSurrogate(g, 0.1)))
    trapped_w = rule.weights[rule.velocities < 0.1].sum()
    # exact up to the sech tail beyond L', of relative size ~(1e-3)^2
    assert res.ratio == pytest.approx(trapped_w**2 / (trapped_w**2 + (1 - trapped_w) ** 2),
                                      abs=1e-6)


def test_convergence_free_case_is_degenerate():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BracketWarning)
        rows = convergence_study(free_model(), (0.5, 0.8), [1, 2, 3])
    assert [r.v_c for r in rows] == pytest.approx([0.5] * 3, abs=1e-6)
    assert rows[0].error is None
    assert all(r.error < 1e-6 for r in rows[1:])


def test_convergence_rejects_unsorted():
    g = Grid(40.0, 256)
    with pytest.raises(ValidationError):
        convergence_study(StepSurrogate(g, 0.1), (0.05, 0.15), [4, 2])


def test_workers_do_not_change_results():
    rule = gauss_rule("legendre", 4).on_interval(0.5, 0.8)
    model = free_model(eps=0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a = run_ensemble(rule, model, workers=1)
        b = run_ensemble(rule, model, workers=3)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


def test_negative_velocity_rejected():
    g = Grid(40.0, 256)
    rule = gauss_rule("legendre", 3).on_interval(-0.1, 0.1)
    with pytest.raises(ValidationError):
        run_ensemble(rule, StepSurrogate(g, 0.0))


def test_mixed_ensemble_at_strong_defect():
    # bracket used for the strong-defect mean-mode plot
    model = free_model(eps=2.7, n_points=2048, dt=5e-3)
    rule = gauss_rule("legendre", 4).on_interval(0.1, 0.14)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WrapAroundWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        e = run_ensemble(rule, model, workers=4)
    captured = [o for o in e.outcomes if o in ("trapped", "reflected")]
    assert 0 < len(captured) < len(e.outcomes), e.outcomes


@pytest.mark.slow
@pytest.mark.parametrize("eps,v_a,v_b,expected", [(0.3, 0.0015, 0.0021, 12.0),
                                                  (3.0, 0.12, 0.16, 15.0)])
def test_separation_point_production(eps, v_a, v_b, expected):
    model = free_model(eps=eps, n_points=2048, dt=5e-3)
    rule = gauss_rule("legendre", 8).on_interval(v_a, v_b)
    e = run_ensemble(rule, model, workers=8)
    assert detect_separation(mean_mode(e)) == pytest.approx(expected, abs=2.0)
