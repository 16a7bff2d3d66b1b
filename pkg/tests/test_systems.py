"""Tests for engine.systems — the builtin catalog, actions, momenta and vector fields."""

import dataclasses
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from engine.errors import (BracketTableError, DimensionError, NonFiniteError,
                           NonSymplecticError, ParameterError, UnknownSystemError)
from engine.groups import SE2Element
from engine.poly import Poly, poisson_bracket
from engine.systems import (BUILTIN_NAMES, act, act_scaling, as_state, builtin, check_bracket_table,
                            hamiltonian_vector_field, infinitesimal_generators, invariant_values,
                            momentum_map, vector_field)


def finite_difference_field(h, state, step=1e-6):
    """(dh/dp, -dh/dq) by central differences."""
    n = len(state) // 2
    grad = np.zeros(len(state))
    for i in range(len(state)):
        e = np.zeros(len(state))
        e[i] = step
        grad[i] = (h.evaluate(state + e) - h.evaluate(state - e)) / (2 * step)
    return np.concatenate([grad[n:], -grad[:n]])


def jacobian(field, state, step=1e-6):
    cols = []
    for i in range(len(state)):
        e = np.zeros(len(state))
        e[i] = step
        cols.append((field(state + e) - field(state - e)) / (2 * step))
    return np.array(cols).T


def gradient(f, state, step=1e-6):
    grad = np.zeros(len(state))
    for i in range(len(state)):
        e = np.zeros(len(state))
        e[i] = step
        grad[i] = (f(state + e) - f(state - e)) / (2 * step)
    return grad


def random_quadratic(rng, nvars=4):
    monomials = [m for m in product(range(3), repeat=nvars) if sum(m) <= 2]
    coefficients = rng.integers(-8, 9, size=len(monomials))
    return Poly(nvars, {m: Fraction(int(c), 4) for m, c in zip(monomials, coefficients)})


# {f, g} = grad f . OMEGA grad g with q first
OMEGA = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

class TestCatalog:

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_every_builtin_builds(self, name):
        spec = builtin(name)
        assert spec.name == name
        assert len(spec.coordinate_names) == spec.dimension

    def test_symplectic_flags(self):
        assert builtin('elliptic').symplectic
        assert not builtin('halfplane-demo').symplectic

    def test_default_modulus(self, elliptic):
        assert elliptic.parameters == {'k': Fraction(1, 2)}

    def test_exact_modulus_from_float(self):
        assert builtin('elliptic', 0.25).parameters['k'] == Fraction(1, 4)

    @pytest.mark.parametrize("k", [0, 1, 1.5, -0.5, 'abc'])
    def test_modulus_out_of_range(self, k):
        with pytest.raises(ParameterError):
            builtin('elliptic', k)

    def test_unknown_system(self):
        with pytest.raises(UnknownSystemError, match="known"):
            builtin('double-pendulum')

    def test_elliptic_energy_at_start(self, elliptic, start):
        assert elliptic.hamiltonian.evaluate(start) == pytest.approx(0.9375)

    def test_sigma_is_the_invariant(self, elliptic, start):
        assert elliptic.invariant_names == ('sigma',)
        assert invariant_values(elliptic, start)[0] == pytest.approx(1.0)

    def test_split_invariant_is_free_energy(self, elliptic):
        assert elliptic.split_invariant == elliptic.invariants[0] / 2

    def test_linear_gravity_has_no_split(self, linear_gravity):
        assert linear_gravity.split_invariant is None


class TestSpecValidation:

    def test_swapped_momenta_fail_the_bracket_table(self, elliptic):
        j1, j2, j3 = elliptic.momentum
        with pytest.raises(BracketTableError):
            dataclasses.replace(elliptic, momentum=(j2, j1, j3), _cache={})

    def test_builtins_pass_the_bracket_table(self, elliptic, linear_gravity):
        check_bracket_table(elliptic)
        check_bracket_table(linear_gravity)

    def test_needs_dynamics(self, linear_gravity):
        with pytest.raises(ValueError, match="Hamiltonian or a vector field"):
            dataclasses.replace(linear_gravity, hamiltonian=None, _cache={})

    def test_coordinate_names_match_dimension(self, linear_gravity):
        with pytest.raises(DimensionError):
            dataclasses.replace(linear_gravity, coordinate_names=('q',), _cache={})

    def test_polynomials_live_in_phase_space(self, linear_gravity, elliptic):
        with pytest.raises(DimensionError):
            dataclasses.replace(linear_gravity, invariants=elliptic.invariants, _cache={})


# ---------------------------------------------------------------------------
# States, actions and momenta
# ---------------------------------------------------------------------------

class TestStates:

    def test_as_state(self, elliptic):
        assert as_state(elliptic, [1, 2, 3, 4]).dtype == float

    def test_wrong_dimension(self, elliptic):
        with pytest.raises(DimensionError):
            as_state(elliptic, [1.0, 2.0])

    def test_non_finite(self, elliptic):
        with pytest.raises(NonFiniteError):
            as_state(elliptic, [0.0, float('inf'), 0.0, 1.0])


class TestActions:

    def test_quarter_rotation(self, elliptic):
        moved = act(elliptic, SE2Element(np.pi / 2), [1.0, 0.0, 0.0, 1.0])
        assert np.allclose(moved, [0.0, 1.0, -1.0, 0.0])

    def test_translation_leaves_momenta(self, elliptic):
        moved = act(elliptic, SE2Element(0.0, 2.0, -1.0), [1.0, 1.0, 0.5, 0.5])
        assert np.allclose(moved, [3.0, 0.0, 0.5, 0.5])

    def test_linear_gravity_shift(self, linear_gravity):
        g = linear_gravity.group.exp([2.5])
        assert np.allclose(act(linear_gravity, g, [1.0, 3.0]), [3.5, 3.0])

    def test_scaling_stretches_height(self, halfplane):
        g = halfplane.group.exp([np.log(3.0)])
        assert np.allclose(act(halfplane, g, [1.0, 2.0]), [1.0, 6.0])

    def test_scaling_wrong_dimension(self, halfplane):
        with pytest.raises(DimensionError):
            act_scaling(halfplane.group.exp([0.5]), [1.0, 2.0, 3.0, 4.0])

    @pytest.mark.statistical
    def test_se2_jacobian_preserves_omega(self, elliptic, rng):
        for _ in range(10):
            g = elliptic.group.random_element(rng)
            d = jacobian(lambda s: act(elliptic, g, s), rng.normal(size=4))
            assert np.allclose(d.T @ OMEGA @ d, OMEGA, atol=1e-8)

    @pytest.mark.statistical
    def test_se2_action_preserves_brackets(self, elliptic, rng):
        for _ in range(10):
            f, h = random_quadratic(rng), random_quadratic(rng)
            g = elliptic.group.random_element(rng)
            state = rng.normal(size=4)
            moved = act(elliptic, g, state)
            grad_f = gradient(lambda s: f.evaluate(act(elliptic, g, s)), state)
            grad_h = gradient(lambda s: h.evaluate(act(elliptic, g, s)), state)
            pulled_back = grad_f @ OMEGA @ grad_h
            assert pulled_back == pytest.approx(poisson_bracket(f, h).evaluate(moved), abs=1e-5)

    @pytest.mark.statistical
    def test_sigma_is_invariant(self, elliptic, rng):
        for _ in range(20):
            g = elliptic.group.random_element(rng)
            state = rng.normal(size=4)
            before = invariant_values(elliptic, state)
            after = invariant_values(elliptic, act(elliptic, g, state))
            assert after == pytest.approx(before, abs=1e-10)


class TestMomentumMap:

    def test_standard_start(self, elliptic, start):
        assert np.allclose(momentum_map(elliptic, start), [0.0, 1.0, 1.0])

    def test_linear_gravity(self, linear_gravity):
        assert np.allclose(momentum_map(linear_gravity, [4.0, -2.0]), [-2.0])

    def test_raw_field_has_none(self, halfplane):
        with pytest.raises(NonSymplecticError):
            momentum_map(halfplane, [0.0, 1.0])


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------

class TestVectorField:

    def test_linear_gravity(self, linear_gravity):
        assert np.allclose(vector_field(linear_gravity)([0.0, 2.0]), [2.0, -1.0])

    def test_elliptic_at_rest(self, elliptic):
        assert np.allclose(vector_field(elliptic)([0.3, -0.7, 0.0, 0.0]), 0.0)

    def test_halfplane(self, halfplane):
        assert np.allclose(vector_field(halfplane)([5.0, 2.0]), [1.0, 4.0])

    def test_batched_states(self, elliptic, rng):
        field = vector_field(elliptic)
        states = rng.normal(size=(6, 4))
        values = field(states)
        assert values.shape == (6, 4)
        assert np.allclose(values[2], field(states[2]))

    @pytest.mark.statistical
    def test_matches_gradient_of_h(self, elliptic, rng):
        field = hamiltonian_vector_field(elliptic)
        for _ in range(10):
            state = rng.normal(size=4)
            assert np.allclose(field(state), finite_difference_field(elliptic.hamiltonian, state),
                               atol=1e-6)

    @pytest.mark.statistical
    def test_flow_is_symplectic(self, elliptic, rng):
        field = hamiltonian_vector_field(elliptic)
        omega_t = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])
        for _ in range(10):
            hessian = omega_t @ jacobian(field, rng.normal(size=4))
            assert np.allclose(hessian, hessian.T, atol=1e-6)

    def test_raw_field_is_not_hamiltonian(self, halfplane):
        with pytest.raises(NonSymplecticError):
            hamiltonian_vector_field(halfplane)

    def test_non_finite_state(self, elliptic):
        with pytest.raises(NonFiniteError):
            vector_field(elliptic)([float('nan'), 0.0, 0.0, 1.0])

    def test_wrong_dimension(self, elliptic):
        with pytest.raises(DimensionError):
            vector_field(elliptic)([0.0, 1.0])


class TestInfinitesimalGenerators:

    def test_shape(self, elliptic, start):
        assert infinitesimal_generators(elliptic, start).shape == (4, 3)

    def test_match_the_action(self, elliptic, rng):
        state = rng.normal(size=4)
        columns = infinitesimal_generators(elliptic, state)
        step = 1e-6
        for a in range(3):
            xi = np.zeros(3)
            xi[a] = step
            plus = act(elliptic, elliptic.group.exp(xi), state)
            minus = act(elliptic, elliptic.group.exp(-xi), state)
            assert np.allclose((plus - minus) / (2 * step), columns[:, a], atol=1e-6)

    def test_rotation_generator(self, elliptic):
        columns = infinitesimal_generators(elliptic, [1.0, 2.0, 3.0, 4.0])
        assert np.allclose(columns[:, 2], [-2.0, 1.0, -4.0, 3.0])

    def test_raw_field(self, halfplane):
        with pytest.raises(NonSymplecticError):
            infinitesimal_generators(halfplane, [0.0, 1.0])
