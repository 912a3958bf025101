import numpy as np
import pytest

from wavehom import hetero_fdm
from wavehom import oracle_expansion as oe
from wavehom.core_types import (GridField, InitialDatum, SimulationConfig,
                                make_constant_medium, make_cosine_medium_1d,
                                make_gaussian_datum)
from wavehom.dispersion import DispersionCoefficients


@pytest.fixture(scope="module")
def narrow_datum():
    # rho_K = 3.4 stays inside Z/eps for eps <= 0.14
    return make_gaussian_datum(0.1, 1)


def test_spectral_datum_weights_and_clipping(gaussian_datum):
    sd = oe.spectral_datum(gaussian_datum)
    assert np.sum(sd.weights) == pytest.approx(sd.domain_volume, abs=1e-10)
    assert sd.radius == pytest.approx(gaussian_datum.support_radius)
    clipped = oe.spectral_datum(gaussian_datum, epsilon=0.2)
    assert clipped.radius <= 0.5 / 0.2
    assert np.max(np.abs(clipped.nodes)) < 0.5 / 0.2


def test_spectral_datum_2d_nodes():
    datum = make_gaussian_datum(0.5, 2)
    sd = oe.spectral_datum(datum, n_nodes=32)
    assert sd.nodes.shape[1] == 2
    assert np.sum(sd.weights) == pytest.approx(sd.domain_volume, rel=1e-12)
    direct = datum.fourier(sd.nodes)
    assert np.max(np.abs(direct - sd.f0)) == 0.0


def test_bloch_coefficient_constant_medium_equals_fourier(gaussian_datum):
    medium = make_constant_medium(1.0, 1)
    for k in (0.4, 1.3, -2.2):
        hat = oe.bloch_coefficient(gaussian_datum, medium, 0.2, k, cutoff=16)
        f0 = gaussian_datum.fourier(np.array([[k]]))[0]
        assert abs(hat - f0) <= 1e-8


def test_bloch_coefficient_validates_k(gaussian_datum, cosine_medium):
    with pytest.raises(ValueError):
        oe.bloch_coefficient(gaussian_datum, cosine_medium, 0.2, 3.0)


def test_bloch_coefficient_outside_support(narrow_datum, cosine_medium):
    # k between rho_K and the edge of Z/eps: the coefficient is numerically 0
    assert narrow_datum.support_radius < 4.0 < 0.5 / 0.1
    hat = oe.bloch_coefficient(narrow_datum, cosine_medium, 0.1, 4.0)
    assert abs(hat) < 1e-6


def test_bloch_coefficient_error_slope(gaussian_datum, cosine_medium):
    errs = [oe.bloch_coefficient_error(gaussian_datum, cosine_medium, eps)
            for eps in (0.2, 0.1)]
    assert errs[1] < errs[0]
    slope = np.log2(errs[0] / errs[1])
    assert slope >= 0.8


def test_quadrature_doubling_guard(gaussian_datum, cosine_medium):
    # absurdly tight tolerance must trip the node-doubling check
    with pytest.raises(oe.QuadratureError):
        oe.bloch_coefficient(gaussian_datum, cosine_medium, 0.2, 0.5,
                             rtol=1e-16)


def test_U_at_time_zero_reproduces_datum(narrow_datum, cosine_medium):
    grid = GridField(np.zeros(301), (0.05,), (-7.5,))
    field = oe.evaluate_U(narrow_datum, cosine_medium, 0.1, grid, 0.0)
    exact = narrow_datum.evaluator(grid.points())
    assert np.max(np.abs(field.values - exact)) < 1e-8


def test_U_constant_medium_is_dalembert(narrow_datum):
    medium = make_constant_medium(2.0, 1)
    grid = GridField(np.zeros(301), (0.1,), (-15.0,))
    t = 3.0
    field = oe.evaluate_U(narrow_datum, medium, 0.1, grid, t, cutoff=16)
    x = grid.axis(0)
    c = np.sqrt(2.0)
    exact = 0.5 * (narrow_datum.evaluator((x - c * t)[:, None])
                   + narrow_datum.evaluator((x + c * t)[:, None]))
    assert np.max(np.abs(field.values - exact)) < 1e-7


def test_U_quadrature_self_convergence(narrow_datum, cosine_medium):
    grid = GridField(np.zeros(101), (0.1,), (-5.0,))
    a = oe.evaluate_U(narrow_datum, cosine_medium, 0.1, grid, 5.0, n_nodes=256)
    b = oe.evaluate_U(narrow_datum, cosine_medium, 0.1, grid, 5.0, n_nodes=512)
    assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_v_at_time_zero_and_nondispersive_limit(gaussian_datum, coeffs_1d):
    grid = GridField(np.zeros(401), (0.05,), (-10.0,))
    v0 = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, 0.0)
    exact = gaussian_datum.evaluator(grid.points())
    assert np.max(np.abs(v0.values - exact)) < 1e-10

    flat = DispersionCoefficients(coeffs_1d.a_star, 0.0, 0.0, 1, 0.01)
    t = 4.0
    c = np.sqrt(coeffs_1d.a_star)
    grid2 = GridField(np.zeros(401), (0.1,), (-20.0,))
    v = oe.evaluate_v(gaussian_datum, flat, 0.2, grid2, t)
    x = grid2.axis(0)
    exact = 0.5 * (gaussian_datum.evaluator((x - c * t)[:, None])
                   + gaussian_datum.evaluator((x + c * t)[:, None]))
    assert np.max(np.abs(v.values - exact)) < 1e-9


def test_v_time_derivative_matches_difference_quotient(gaussian_datum, coeffs_1d):
    grid = GridField(np.zeros(201), (0.1,), (-10.0,))
    t, h = 2.0, 1e-4
    dv = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, t, derivative="t")
    plus = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, t + h)
    minus = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, t - h)
    quotient = (plus.values - minus.values) / (2 * h)
    assert np.max(np.abs(dv.values - quotient)) < 1e-6


def test_v_gradient_matches_difference_quotient(gaussian_datum, coeffs_1d):
    grid = GridField(np.zeros(201), (0.1,), (-10.0,))
    dv = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, 2.0,
                       derivative=("x", 0))
    shifted = GridField(np.zeros(201), (0.1,), (-10.0 + 1e-5,))
    plus = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, shifted, 2.0)
    base = oe.evaluate_v(gaussian_datum, coeffs_1d, 0.2, grid, 2.0)
    quotient = (plus.values - base.values) / 1e-5
    assert np.max(np.abs(dv.values - quotient)) < 1e-4


def test_U_approximates_heterogeneous_solution(gaussian_datum, cosine_medium):
    # || u_FD - U || at t = eps^-2 shrinks roughly linearly in eps
    gaps = []
    for eps in (0.2, 0.1):
        t_final = 1.0 / eps**2
        dx = 2 * np.pi * eps / 30
        speed = np.sqrt(2.9)
        hw = gaussian_datum.truncation_radius + speed * t_final + 4 * dx
        from wavehom.core_types import divisor_time_step
        cfg = SimulationConfig(
            epsilon=eps, final_time=t_final, half_widths=(hw,), dx=(dx,),
            dt=divisor_time_step(0.008, 0.5 * dx / speed, t_final),
            boundary=("zero",), datum=gaussian_datum)
        u = hetero_fdm.run(cfg, cosine_medium).final()
        U = oe.evaluate_U(gaussian_datum, cosine_medium, eps, u, t_final)
        gaps.append(np.sqrt(np.sum((u.values - U.values) ** 2) * dx))
    assert gaps[1] < gaps[0]
    slope = np.log2(gaps[0] / gaps[1])
    assert slope >= 0.8


def test_band0_constant_medium_reproduces_datum(narrow_datum):
    medium = make_constant_medium(1.0, 1)
    grid = GridField(np.zeros(201), (0.1,), (-10.0,))
    u0 = oe.band_m0_solution(narrow_datum, medium, 0.1, grid, 0.0, cutoff=16)
    exact = narrow_datum.evaluator(grid.points())
    assert np.max(np.abs(u0.values - exact)) < 1e-6


def test_band0_tracks_heterogeneous_solution(gaussian_datum, cosine_medium):
    # Santosa-Symes band truncation: || u_FD - u_0 || = O(eps), stable in t
    eps = 0.1
    t_final = 100.0
    dx = 2 * np.pi * eps / 30
    speed = np.sqrt(2.9)
    hw = gaussian_datum.truncation_radius + speed * t_final + 4 * dx
    from wavehom.core_types import divisor_time_step
    cfg = SimulationConfig(
        epsilon=eps, final_time=t_final, half_widths=(hw,), dx=(dx,),
        dt=divisor_time_step(0.008, 0.5 * dx / speed, t_final),
        boundary=("zero",), datum=gaussian_datum, output_every=8131)
    result = hetero_fdm.run(cfg, cosine_medium)
    gaps = []
    for t, field in zip(result.times, result.fields):
        u0 = oe.band_m0_solution(gaussian_datum, cosine_medium, eps, field, t)
        gaps.append(np.sqrt(np.sum((field.values - u0.values) ** 2) * dx))
    # C eps with a stable constant: all sampled times obey gap <= 3 eps
    assert max(gaps) <= 3.0 * eps


def test_parseval_constant_medium_closes(gaussian_datum):
    medium = make_constant_medium(1.0, 1)
    lhs, rhs, gap = oe.parseval_check(gaussian_datum, medium, 0.5, 3, cutoff=24)
    assert lhs == pytest.approx(np.sqrt(np.pi / 0.8), rel=1e-9)
    assert abs(gap) <= 1e-6


def test_parseval_band_sum_convergence(gaussian_datum, cosine_medium):
    _, _, gap0 = oe.parseval_check(gaussian_datum, cosine_medium, 0.5, 0, cutoff=24)
    _, _, gap3 = oe.parseval_check(gaussian_datum, cosine_medium, 0.5, 3, cutoff=24)
    assert 0 < gap3 < gap0
    assert gap0 / gap3 >= 10.0


def test_parseval_zero_datum(cosine_medium):
    zero = InitialDatum(
        dimension=1,
        evaluator=lambda x: np.zeros(np.asarray(x).shape[:-1]),
        fourier=lambda k: np.zeros(np.asarray(k).shape[:-1], dtype=complex),
        support_radius=1.0, active_axes=(0,), truncation_radius=1.0,
        label="zero")
    lhs, rhs, gap = oe.parseval_check(zero, cosine_medium, 0.5, 1, cutoff=16)
    assert lhs == 0.0 and rhs == 0.0 and gap == 0.0


def test_oracle_fields_are_real(narrow_datum, cosine_medium, coeffs_1d):
    grid = GridField(np.zeros(64), (0.17,), (-5.0,))  # asymmetric grid
    for field in (
        oe.evaluate_U(narrow_datum, cosine_medium, 0.1, grid, 3.0),
        oe.evaluate_v(narrow_datum, coeffs_1d, 0.1, grid, 3.0),
        oe.band_m0_solution(narrow_datum, cosine_medium, 0.1, grid, 3.0),
    ):
        assert field.values.dtype == np.float64


def test_as_real_guard_raises():
    with pytest.raises(RuntimeError, match="imag"):
        oe._as_real(np.array([1.0 + 0.5j]), "probe")


def test_desk_scale_oracles_are_one_dimensional():
    datum = make_gaussian_datum(0.5, 2)
    from wavehom.core_types import make_smoothed_square_medium_2d
    medium = make_smoothed_square_medium_2d()
    with pytest.raises(NotImplementedError):
        oe.bloch_coefficient(datum, medium, 0.2, 0.5)
