import numpy as np
import pytest

from wavehom import bloch_cell, dispersion
from wavehom.core_types import make_constant_medium, make_cosine_medium_1d


def harmonic_mean_1d(medium, n=1 << 16):
    """Independent oracle: 1D homogenized coefficient is the harmonic mean."""
    y = np.linspace(-np.pi, np.pi, n, endpoint=False)[:, None]
    return 1.0 / np.mean(1.0 / medium.matrix(y)[:, 0, 0])


def test_constant_medium_coefficients():
    m = make_constant_medium(1.7, 1)
    coeffs = dispersion.fit_dispersion(m, cutoff=16)
    assert coeffs.a_star == pytest.approx(1.7, abs=1e-8)
    assert coeffs.alpha == pytest.approx(0.0, abs=1e-6)
    assert coeffs.beta == 0.0


def test_a_star_against_harmonic_mean(cosine_medium, coeffs_1d):
    oracle = harmonic_mean_1d(cosine_medium)
    assert oracle == pytest.approx(np.sqrt(0.29), abs=1e-10)
    assert coeffs_1d.a_star == pytest.approx(oracle, abs=1e-6)
    assert dispersion.fit_a_star(cosine_medium) == pytest.approx(oracle, abs=1e-6)


def test_alpha_matches_reference(coeffs_1d):
    assert coeffs_1d.alpha == pytest.approx(-0.5853, abs=2e-3)
    assert coeffs_1d.beta == 0.0


def test_fit_alpha_beta_surface(cosine_medium, coeffs_1d):
    alpha, beta = dispersion.fit_alpha_beta(cosine_medium)
    assert alpha == pytest.approx(coeffs_1d.alpha, abs=1e-12)
    assert beta == 0.0


def test_fit_requires_symmetry_flags(cosine_medium):
    stripped = type(cosine_medium)(
        dimension=1, matrix=cosine_medium.matrix, ellipticity=0.1,
        reflection_symmetric=False, permutation_symmetric=False)
    with pytest.raises(ValueError, match="symmetry"):
        dispersion.fit_dispersion(stripped)


def test_polynomial_fit_oracle(cosine_medium, coeffs_1d):
    # independent extraction: least squares of mu0 = a k^2 + c k^4 + e k^6
    ks = np.linspace(0.01, 0.1, 12)
    mus = np.array([bloch_cell.mu0(cosine_medium, [k]) for k in ks])
    design = np.stack([ks**2, ks**4, ks**6], axis=1)
    sol, *_ = np.linalg.lstsq(design, mus, rcond=None)
    assert sol[0] == pytest.approx(coeffs_1d.a_star, abs=5e-3)
    assert sol[1] == pytest.approx(coeffs_1d.alpha, abs=5e-3)


def test_third_derivative_vanishes(cosine_medium):
    # evenness is not assumed here: all four one-sided evaluations appear
    h = 0.02
    mu = lambda k: bloch_cell.mu0(cosine_medium, [k])  # noqa: E731
    third = (mu(2 * h) - 2 * mu(h) + 2 * mu(-h) - mu(-2 * h)) / (2 * h**3)
    assert abs(third) <= 1e-6


def test_richardson_rejects_erratic_sequences():
    with pytest.raises(dispersion.RichardsonError):
        dispersion._richardson([1.0, 0.5, 0.7, 0.4])


def test_build_tensors_1d_symbol():
    coeffs = dispersion.DispersionCoefficients(1.0, -1.0, 0.0, 1, 0.01)
    tensors = dispersion.build_tensors(coeffs)
    assert np.allclose(tensors.a, [[1.0]])
    k = np.array([1.3])
    assert dispersion.quartic_symbol(tensors.c, k) == pytest.approx(-1.3**4)


def test_build_tensors_2d_symbol_and_symmetry():
    coeffs = dispersion.DispersionCoefficients(0.5808, -0.3078, 0.0515, 2, 0.01)
    tensors = dispersion.build_tensors(coeffs)
    sym = dispersion.quartic_symbol(tensors.c, np.array([1.0, 1.0]))
    assert sym == pytest.approx(2 * -0.3078 + 6 * 0.0515, abs=1e-12)
    assert sym == pytest.approx(-0.3066, abs=1e-10)
    c = tensors.c
    assert c[0, 0, 1, 1] == c[0, 1, 0, 1] == c[0, 1, 1, 0] == 0.0515


@pytest.mark.parametrize("alpha,beta,case,e_val,f_diag,f_cross", [
    (-1.0, -1.0, 1, 4.0, 3.0, 1.0),
    (-0.3078, 0.0515, 2, (0.3078 + 0.0) / 0.5808, 0.0, 0.3078 + 3 * 0.0515),
    (0.4, -0.2, 3, 3 * 0.2 / 0.5808, 0.4 + 0.6, 0.0),
    (0.4, 0.2, 4, 0.0, 0.4, 0.6),
])
def test_decompose_cases(alpha, beta, case, e_val, f_diag, f_cross):
    a_star = 1.0 if case == 1 else 0.5808
    coeffs = dispersion.DispersionCoefficients(a_star, alpha, beta, 2, 0.01)
    tensors = dispersion.decompose(coeffs)
    assert tensors.case == case
    assert tensors.e[0, 0] == pytest.approx(e_val, abs=1e-12)
    assert tensors.e[0, 1] == 0.0
    assert tensors.f[0, 0, 0, 0] == pytest.approx(f_diag, abs=1e-12)
    assert tensors.f[0, 1, 0, 1] == pytest.approx(f_cross, abs=1e-12)
    assert tensors.f[0, 0, 1, 1] == 0.0


def test_decompose_reference_values_2d():
    coeffs = dispersion.DispersionCoefficients(0.5808, -0.3078, 0.0515, 2, 0.01)
    tensors = dispersion.decompose(coeffs)
    assert tensors.e[0, 0] == pytest.approx(0.5300, abs=1e-3)
    assert tensors.f[0, 1, 0, 1] == pytest.approx(0.4623, abs=1e-3)
    assert tensors.f[0, 0, 0, 0] == 0.0


def test_case4_reduces_to_plain_fourth_order():
    coeffs = dispersion.DispersionCoefficients(1.0, 0.25, 0.1, 2, 0.01)
    tensors = dispersion.decompose(coeffs)
    assert tensors.case == 4
    assert np.all(tensors.e == 0.0)
    r = np.random.default_rng(4)
    for k in r.uniform(-2, 2, (50, 2)):
        cf = dispersion.quartic_symbol(tensors.c, k)
        ff = dispersion.quartic_symbol(tensors.f, k)
        assert cf == pytest.approx(ff, rel=1e-12)
        assert dispersion.symbol_residual(tensors, k) == pytest.approx(0.0, abs=1e-13)


def test_symbol_residual_1d_trivial():
    coeffs = dispersion.DispersionCoefficients(1.0, -1.0, 0.0, 1, 0.01)
    tensors = dispersion.decompose(coeffs)
    assert tensors.e[0, 0] == 1.0 and tensors.f[0, 0, 0, 0] == 0.0
    for k in (0.3, 1.0, 2.0):
        assert dispersion.symbol_residual(tensors, [k]) == pytest.approx(0.0, abs=1e-12)


def test_symbol_residual_requires_decomposition():
    coeffs = dispersion.DispersionCoefficients(1.0, -1.0, 0.0, 1, 0.01)
    with pytest.raises(ValueError):
        dispersion.symbol_residual(dispersion.build_tensors(coeffs), [0.5])


def test_decomposition_identity_random_k_all_cases():
    r = np.random.default_rng(99)
    for alpha, beta in [(-1.0, -0.7), (-0.3, 0.4), (0.8, -0.5), (0.6, 0.3)]:
        coeffs = dispersion.DispersionCoefficients(0.7, alpha, beta, 2, 0.01)
        tensors = dispersion.decompose(coeffs)
        ks = r.uniform(-2.0, 2.0, (1000, 2))
        for k in ks:
            bound = 1e-12 * (1.0 + np.sum(k**2) ** 2)
            assert dispersion.symbol_residual(tensors, k) <= bound


def test_e_f_positive_semidefinite_probes():
    r = np.random.default_rng(12)
    coeffs = dispersion.DispersionCoefficients(0.5808, -0.3078, 0.0515, 2, 0.01)
    tensors = dispersion.decompose(coeffs)
    ks = r.uniform(-3, 3, (1000, 2))
    assert np.all(dispersion.quadratic_symbol(tensors.e, ks) >= 0.0)
    assert np.all(dispersion.quartic_symbol(tensors.f, ks) >= 0.0)
    for _ in range(1000):
        xi = r.standard_normal((2, 2))
        xi = 0.5 * (xi + xi.T)
        quad = np.einsum("ijkl,ij,kl->", tensors.f, xi, xi)
        assert quad >= -1e-14
    # F block symmetry F_ijkl = F_klij
    assert np.max(np.abs(tensors.f - np.transpose(tensors.f, (2, 3, 0, 1)))) == 0.0


def test_coefficients_validate():
    with pytest.raises(ValueError):
        dispersion.DispersionCoefficients(-1.0, 0.0, 0.0, 1, 0.01)
    with pytest.raises(ValueError):
        dispersion.DispersionCoefficients(1.0, np.nan, 0.0, 1, 0.01)
