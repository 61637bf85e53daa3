import cmath
import math

import numpy as np
import pytest
from scipy.linalg import expm

from app.core.errors import InvalidParameterError
from app.core.su2 import (
    SU2Propagator,
    Spinor,
    apply,
    cayley_klein,
    compose,
    distance_up_to_phase,
    euler_zxz,
    from_cayley_klein,
    identity,
    is_unitary,
    ordered_product,
    prop_const,
    random_su2,
    reconstruct,
    rotation,
    state_distance,
    to_bloch,
    x_rotation,
    z_rotation,
)

IX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
IY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
IZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2


def _expm_reference(offset, amplitude, phase, duration):
    H = offset * IZ + amplitude * (math.cos(phase) * IX + math.sin(phase) * IY)
    return expm(-1j * H * duration)


class TestPropConst:
    def test_zero_everything_is_identity(self):
        assert np.allclose(prop_const(0, 0, 0, 0).matrix, np.eye(2), atol=1e-15)

    def test_on_resonance_x_pulse(self):
        assert np.allclose(prop_const(0, 1, 0, math.pi / 2).matrix, x_rotation(math.pi / 2).matrix, atol=1e-15)

    def test_pure_precession_matches_z_rotation(self):
        U = prop_const(1.0, 0.0, 0.0, math.pi)
        assert np.allclose(U.matrix, np.diag([cmath.exp(-0.5j * math.pi), cmath.exp(0.5j * math.pi)]), atol=1e-15)

    def test_matches_matrix_exponential(self, rng):
        for _ in range(200):
            offset, amplitude = rng.uniform(-3, 3), rng.uniform(0, 2)
            phase, duration = rng.uniform(-math.pi, math.pi), rng.uniform(0, 10)
            U = prop_const(offset, amplitude, phase, duration)
            assert np.abs(U.matrix - _expm_reference(offset, amplitude, phase, duration)).max() < 1e-12

    @pytest.mark.parametrize(
        "args",
        [(math.nan, 0, 0, 1), (0, math.inf, 0, 1), (0, 1, 0, -1), (0, -1, 0, 1)],
    )
    def test_rejects_invalid_input(self, args):
        with pytest.raises(InvalidParameterError):
            prop_const(*args)


class TestCayleyKlein:
    def test_batched_kernel_matches_scalar(self, rng):
        offsets = rng.uniform(-2, 2, size=50)
        a, b = cayley_klein(offsets, 0.7, 0.3, 0.25)
        for w, ai, bi in zip(offsets, a, b):
            assert np.abs(from_cayley_klein(ai, bi).matrix - prop_const(w, 0.7, 0.3, 0.25).matrix).max() < 1e-14

    def test_ordered_product_acts_first_element_first(self, rng):
        factors = [random_su2(rng) for _ in range(7)]
        a = [U.cayley_klein[0] for U in factors]
        b = [U.cayley_klein[1] for U in factors]
        product = from_cayley_klein(*ordered_product(a, b))
        expected = compose(reversed(factors))
        assert distance_up_to_phase(product, expected) < 1e-13
        assert np.abs(product.matrix - expected.matrix).max() < 1e-12

    def test_empty_product_is_identity(self):
        assert ordered_product([], []) == (1.0 + 0.0j, 0.0j)


class TestCompose:
    def test_rightmost_acts_first(self):
        # A 90° x pulse then a 90° z precession carries +z to -y then to +x
        state = apply(compose([z_rotation(math.pi / 2), x_rotation(math.pi / 2)]), Spinor.up())
        bloch = to_bloch(state)
        assert (bloch.x, bloch.y, bloch.z) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)

    def test_empty_list_rejected(self):
        with pytest.raises(InvalidParameterError):
            compose([])

    def test_single_factor(self, rng):
        U = random_su2(rng)
        assert np.array_equal(compose([U]).matrix, U.matrix)

    def test_products_stay_unitary(self, rng):
        U = compose(random_su2(rng) for _ in range(500))
        assert is_unitary(U)


class TestRotation:
    def test_axis_is_normalized(self):
        assert np.allclose(rotation(1.1, (0, 0, 3)).matrix, z_rotation(1.1).matrix, atol=1e-15)

    def test_general_axis_matches_expm(self, rng):
        axis = rng.normal(size=3)
        n = axis / np.linalg.norm(axis)
        generator = n[0] * IX + n[1] * IY + n[2] * IZ
        assert np.abs(rotation(0.8, axis).matrix - expm(-0.8j * generator)).max() < 1e-13

    def test_zero_axis_rejected(self):
        with pytest.raises(InvalidParameterError):
            rotation(1.0, (0, 0, 0))


class TestEulerZXZ:
    def test_round_trip_on_random_propagators(self, rng):
        for _ in range(10_000):
            U = random_su2(rng)
            angles = euler_zxz(U)
            assert 0.0 <= angles.theta <= math.pi
            assert distance_up_to_phase(U, reconstruct(angles)) < 1e-9

    def test_identity_is_degenerate(self):
        angles = euler_zxz(identity())
        assert angles.theta == 0.0
        assert angles.beta == 0.0

    def test_x_inversion(self):
        angles = euler_zxz(x_rotation(math.pi))
        assert angles.theta == pytest.approx(math.pi, abs=1e-12)
        assert distance_up_to_phase(reconstruct(angles), x_rotation(math.pi)) < 1e-12

    def test_recovers_chosen_angles(self):
        U = compose([z_rotation(0.4), x_rotation(1.2), z_rotation(-0.9)])
        angles = euler_zxz(U)
        assert (angles.alpha, angles.theta, angles.beta) == pytest.approx((0.4, 1.2, -0.9), abs=1e-12)


class TestStates:
    def test_bloch_of_basis_states(self):
        assert to_bloch(Spinor.up()).z == 1.0
        plus_y = to_bloch(Spinor.plus_y())
        assert (plus_y.x, plus_y.y, plus_y.z) == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)

    def test_norm_preserved(self, rng):
        for _ in range(100):
            assert to_bloch(apply(random_su2(rng), Spinor.up())).norm == pytest.approx(1.0, abs=1e-12)

    def test_state_distance_ignores_global_phase(self):
        a = Spinor.plus_y()
        b = Spinor(a.vector * cmath.exp(0.7j))
        assert state_distance(a, b) < 1e-15

    def test_unnormalized_spinor_rejected(self):
        with pytest.raises(InvalidParameterError):
            Spinor.of(1.0, 1.0)


class TestDistance:
    def test_global_phase_invisible(self, rng):
        U = random_su2(rng)
        assert distance_up_to_phase(U, SU2Propagator(-U.matrix)) < 1e-15

    def test_distinct_rotations_are_apart(self):
        assert distance_up_to_phase(x_rotation(0.0), x_rotation(math.pi)) == pytest.approx(1.0)

    def test_non_unitary_rejected(self):
        with pytest.raises(InvalidParameterError):
            SU2Propagator(np.array([[2, 0], [0, 0.5]], dtype=complex))
