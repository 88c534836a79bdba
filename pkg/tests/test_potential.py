# tests/test_potential.py

import numpy as np
import pytest

from kato_scat.errors import ConfigError, NonIntegrableTail
from kato_scat.potential.oracle import bound_state_count, step_jost, step_jost_derivative, step_zero, tune_singular_step
from kato_scat.potential.potential import (
    KatoVerdict,
    Potential,
    factorize,
    first_moment,
    jost_majorant,
    kato_verdict,
    regular_majorant,
    resolvent_bound_constant,
)


def test_step_moment_closed_form(weak_well, deep_well):
    assert first_moment(weak_well) == pytest.approx(0.95, abs=1e-12)
    assert first_moment(deep_well) == pytest.approx(1.5, abs=1e-12)


def test_zero_potential_moment(zero_potential):
    assert first_moment(zero_potential) == 0.0
    assert kato_verdict(zero_potential) == KatoVerdict.GUARANTEED_SIMILAR


def test_kato_verdicts(weak_well, deep_well):
    assert kato_verdict(weak_well) == KatoVerdict.GUARANTEED_SIMILAR
    assert kato_verdict(deep_well) == KatoVerdict.INCONCLUSIVE


def test_exponential_moment_matches_quadrature():
    potential = Potential.exponential(-2.0 + 1.0j, 1.5)
    # int x |A| exp(-r x) dx = |A| / r^2
    assert first_moment(potential) == pytest.approx(abs(-2.0 + 1.0j) / 1.5 ** 2, rel=1e-8)


def test_gaussian_moment():
    potential = Potential.gaussian(0.5, 2.0)
    assert first_moment(potential) == pytest.approx(0.5 * 2.0 ** 2 / 2, rel=1e-8)


def test_step_with_phase():
    potential = Potential.step(2.0, 1.5, 0.7)
    values = potential(np.array([0.0, 0.75, 1.5, 3.0]))
    assert values[0] == pytest.approx(2.0 * np.exp(0.7j))
    assert values[1] == pytest.approx(2.0 * np.exp(0.7j))
    assert values[2] == 0
    assert values[3] == 0
    assert not potential.is_real
    assert potential.breakpoints() == [1.5]


def test_zero_depth_step_is_zero():
    assert Potential.step(0.0, 1.0).is_zero


def test_stack_rejects_overlap():
    with pytest.raises(ConfigError):
        Potential.stack([(0.0, 1.0, -1.0), (0.5, 2.0, 1.0)])


def test_stack_breakpoints_and_support():
    potential = Potential.stack([(0.5, 1.0, -1.0), (1.0, 2.5, 0.5j)])
    assert potential.breakpoints() == [0.5, 1.0, 2.5]
    assert potential.support_hint() == 2.5
    assert potential.sup_norm == 1.0


@pytest.mark.parametrize("rate", [0.0, -1.0])
def test_exponential_rejects_bad_rate(rate):
    with pytest.raises(ConfigError):
        Potential.exponential(1.0, rate)


def test_sampled_validation():
    with pytest.raises(ConfigError):
        Potential.sampled([0.5, 1.0], [1.0, 2.0])
    with pytest.raises(ConfigError):
        Potential.sampled([0.0, 1.0], [1.0, 2.0], tail_kind="linear")


def test_sampled_power_tail_needs_finite_moment():
    potential = Potential.sampled([0.0, 1.0, 2.0], [-1.0, -0.5, -0.25], tail_kind="power", tail_rate=1.5)
    with pytest.raises(NonIntegrableTail):
        first_moment(potential)


def test_sampled_exponential_tail_is_continuous():
    potential = Potential.sampled([0.0, 1.0, 2.0], [-1.0, -0.5, -0.25], tail_rate=2.0)
    assert potential(np.array([2.0]))[0] == pytest.approx(-0.25)
    assert potential(np.array([2.0 + 1e-9]))[0] == pytest.approx(-0.25, rel=1e-6)
    assert potential(np.array([3.0]))[0] == pytest.approx(-0.25 * np.exp(-2.0))


def test_factorization_reconstructs_potential():
    potential = Potential.gaussian(1.0 - 2.0j, 1.0)
    pair = factorize(potential)
    x = np.linspace(0.0, 4.0, 41)
    np.testing.assert_allclose(pair.reconstruct(x), potential(x), atol=1e-14)
    np.testing.assert_allclose(pair.a(x), np.sqrt(np.abs(potential(x))), atol=1e-14)


def test_resolvent_bound_constant(weak_well):
    assert resolvent_bound_constant(weak_well) == pytest.approx(np.exp(0.95))


def test_majorants_are_nonnegative_and_monotone(weak_well):
    x = np.linspace(0.0, 2.0, 21)
    regular = regular_majorant(weak_well, x, 1.0j)
    tail = jost_majorant(weak_well, x, 1.0j)
    assert np.all(regular >= 0)
    assert np.all(np.diff(tail) <= 1e-15)
    assert tail[-1] == 0.0


def test_step_oracle_free_limit():
    ks = np.array([0.5j, 1 + 1j, -2 + 0.1j])
    np.testing.assert_allclose(step_jost(0.0, 1.0, ks), np.ones(3), atol=1e-14)


def test_step_oracle_derivative_matches_difference():
    k = 0.7 + 0.4j
    h = 1e-6
    difference = (step_jost(-3.0, 1.0, k + h) - step_jost(-3.0, 1.0, k - h)) / (2 * h)
    assert abs(step_jost_derivative(-3.0, 1.0, k) - difference) < 1e-7


def test_step_zero_on_imaginary_axis(deep_well_k0):
    assert abs(deep_well_k0.real) < 1e-12
    assert 0.2 < deep_well_k0.imag < 0.3
    assert abs(step_jost(-3.0, 1.0, deep_well_k0)) < 1e-12


@pytest.mark.parametrize("depth, count", [(1.9, 0), (3.0, 1), (10.0, 1), (30.0, 2), (0.0, 0)])
def test_bound_state_count(depth, count):
    assert bound_state_count(depth) == count


def test_tuned_singular_step_has_real_zero():
    potential = tune_singular_step(1.0)
    x0, x1, value = potential.intervals[0]
    assert (x0, x1) == (0.0, 1.0)
    assert abs(value.imag) > 1e-8
    assert abs(step_jost(value, 1.0, 1.0)) < 1e-10
