import math

import numpy as np
import pytest

from wavehom.core_types import (DomainError, GridField, SimulationConfig,
                                SUPPORT_TOLERANCE, WaveState, divisor_time_step,
                                make_constant_medium, make_cosine_medium_1d,
                                make_gaussian_datum,
                                make_smoothed_square_medium_2d, symmetric_axis,
                                tabulated_medium, wrap_to_cell)


def test_cosine_medium_paper_values(cosine_medium):
    y = np.array([[0.0], [np.pi], [np.pi / 2]])
    a = cosine_medium.matrix(y)[:, 0, 0]
    assert a[0] == pytest.approx(2.9, abs=1e-14)
    assert a[1] == pytest.approx(0.1, abs=1e-14)
    assert cosine_medium.ellipticity == pytest.approx(0.1)


def test_cosine_medium_degenerate_cases():
    const = make_cosine_medium_1d(1.0, 0.0)
    y = np.linspace(-3, 3, 7)[:, None]
    assert np.allclose(const.matrix(y)[:, 0, 0], 1.0)
    half = make_cosine_medium_1d(2.0, 1.0)
    assert half.matrix(np.array([[np.pi / 2]]))[0, 0, 0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        make_cosine_medium_1d(1.0, 1.0)
    with pytest.raises(ValueError):
        make_cosine_medium_1d(1.0, -1.5)


def _square_bump(s):
    return (1.0 + np.tanh(4.0 * (s + 0.6 * np.pi))) * (1.0 - np.tanh(4.0 * (s - 0.6 * np.pi)))


def _cell_mean_2d(fn, n=2048):
    axis = np.linspace(-np.pi, np.pi, n, endpoint=False)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return float(np.mean(fn(xx, yy)))


def test_smoothed_square_center_and_corner(square_medium_2d):
    # independent quadrature of the cell mean of the bump product
    c_mean = _cell_mean_2d(lambda x, y: _square_bump(x) * _square_bump(y) / 8.0)
    c00 = _square_bump(0.0) ** 2 / 8.0
    assert c00 == pytest.approx(2.0, abs=1e-5)  # tanh saturated
    a00 = square_medium_2d.matrix(np.array([[0.0, 0.0]]))[0]
    assert np.allclose(a00, (1.0 + c00 - c_mean) * np.eye(2), atol=1e-9)
    c_corner = _square_bump(np.pi) ** 2 / 8.0
    assert c_corner < 1e-7
    a_corner = square_medium_2d.matrix(np.array([[np.pi, np.pi]]))[0]
    assert np.allclose(a_corner, (1.0 + c_corner - c_mean) * np.eye(2), atol=1e-9)


def test_smoothed_square_unit_mean(square_medium_2d):
    mean = _cell_mean_2d(
        lambda x, y: square_medium_2d.matrix(np.stack([x, y], axis=-1))[..., 0, 0])
    assert mean == pytest.approx(1.0, abs=2e-9)  # two independent quadratures


def test_medium_validate_catches_broken_symmetry():
    def matrix(y):
        a = 2.0 + np.sin(y[..., 0])  # odd: not reflection symmetric
        return a[..., None, None]

    bad = make_cosine_medium_1d(1.5, 1.4)
    bad = type(bad)(dimension=1, matrix=matrix, ellipticity=0.5,
                    reflection_symmetric=True, permutation_symmetric=True)
    with pytest.raises(ValueError, match="reflection"):
        bad.validate()


def test_medium_evaluators_are_pure(cosine_medium):
    y = np.random.default_rng(5).uniform(-np.pi, np.pi, (100, 1))
    a1 = cosine_medium.matrix(y)
    a2 = cosine_medium.matrix(y)
    assert np.array_equal(a1, a2)


def test_medium_symmetries_at_random_points(square_medium_2d):
    r = np.random.default_rng(11)
    y = r.uniform(-np.pi, np.pi, (1000, 2))
    a = square_medium_2d.matrix(y)
    for i in range(2):
        ys = y.copy()
        ys[:, i] *= -1
        assert np.max(np.abs(square_medium_2d.matrix(ys) - a)) < 1e-12
    ys = y[:, ::-1].copy()
    assert np.max(np.abs(square_medium_2d.matrix(ys) - a)) < 1e-12


def test_wrap_to_cell():
    y = np.array([[3.5 * np.pi], [-1.25 * np.pi]])
    w = wrap_to_cell(y)
    assert np.all(w >= -np.pi) and np.all(w < np.pi)
    assert w[0, 0] == pytest.approx(-0.5 * np.pi)


def test_tabulated_medium_matches_cosine(cosine_medium):
    samples = cosine_medium.matrix(
        np.linspace(-np.pi, np.pi, 256, endpoint=False)[:, None])[:, 0, 0]
    tab = tabulated_medium(samples, reflection_symmetric=True)
    y = np.random.default_rng(2).uniform(-np.pi, np.pi, (200, 1))
    exact = cosine_medium.matrix(y)[:, 0, 0]
    approx = tab.matrix(y)[:, 0, 0]
    assert np.max(np.abs(exact - approx)) < 2e-4  # linear interp on 256 samples
    with pytest.raises(ValueError):
        tabulated_medium(samples[:32])


def test_gaussian_datum_fourier_convention():
    datum = make_gaussian_datum(0.4, 1)
    assert datum.evaluator(np.zeros((1, 1)))[0] == pytest.approx(1.0)
    x = np.linspace(-14, 14, 2 ** 15 + 1)
    f = datum.evaluator(x[:, None])
    for k in np.linspace(-3.0, 3.0, 9):
        quad = np.trapezoid(f * np.exp(-1j * k * x), x) / math.sqrt(2 * math.pi)
        closed = datum.fourier(np.array([[k]]))[0]
        assert abs(quad - closed) < 1e-8


def test_gaussian_datum_axis_mask_and_decay():
    datum = make_gaussian_datum(0.6, 2, (True, False))
    x = np.zeros((5, 2))
    x[:, 1] = np.linspace(-40, 40, 5)
    vals = datum.evaluator(x)
    assert np.allclose(vals, 1.0)  # constant along the masked-out axis
    assert datum.active_dimension == 1
    far = datum.evaluator(np.array([[50.0, 0.0]]))[0]
    assert far < 1e-300 or far == 0.0

    red = datum.reduced()
    assert red.dimension == 1
    xs = np.linspace(-3, 3, 7)[:, None]
    assert np.allclose(red.evaluator(xs), np.exp(-0.6 * xs[:, 0] ** 2))


def test_gaussian_datum_conjugate_symmetry_and_support():
    datum = make_gaussian_datum(0.4, 1)
    k = np.linspace(0.1, 5.0, 23)[:, None]
    plus = datum.fourier(k)
    minus = datum.fourier(-k)
    assert np.max(np.abs(minus - np.conj(plus))) < 1e-15
    outside = np.abs(datum.fourier(
        np.array([[datum.support_radius * 1.0001]]))[0])
    assert outside < SUPPORT_TOLERANCE
    inside = np.abs(datum.fourier(
        np.array([[datum.support_radius * 0.999]]))[0])
    assert inside > SUPPORT_TOLERANCE


def test_grid_field_invariants():
    with pytest.raises(ValueError):
        GridField(np.zeros(4), (0.1,), (0.0,))
    with pytest.raises(ValueError):
        GridField(np.zeros(10), (-0.1,), (0.0,))
    with pytest.raises(ValueError):
        GridField(np.zeros((8, 8)), (0.1,), (0.0,))
    g = GridField(np.zeros(11), (0.5,), (-2.5,))
    assert g.axis(0)[5] == pytest.approx(0.0)
    assert g.cell_volume() == pytest.approx(0.5)


def test_wave_state_invariants():
    a = GridField(np.zeros(8), (0.1,), (0.0,))
    b = GridField(np.zeros(8), (0.2,), (0.0,))
    with pytest.raises(ValueError):
        WaveState(a, b, 1, 0.1)
    with pytest.raises(ValueError):
        WaveState(a, a, 1, -0.1)
    st = WaveState(a, a, 3, 0.25)
    assert st.time == pytest.approx(0.75)


def test_simulation_config_checks(gaussian_datum):
    cfg = SimulationConfig(epsilon=0.2, final_time=10.0, half_widths=(30.0,),
                           dx=(0.05,), dt=0.01, boundary=("zero",),
                           datum=gaussian_datum)
    cfg.check_domain(speed_bound=1.7)  # 9 + 17 < 30
    with pytest.raises(DomainError):
        cfg.check_domain(speed_bound=3.0)
    with pytest.raises(ValueError):
        SimulationConfig(epsilon=-1, final_time=1, half_widths=(1.0,),
                         dx=(0.1,), dt=0.01, boundary=("zero",),
                         datum=gaussian_datum)
    with pytest.raises(ValueError):
        SimulationConfig(epsilon=0.1, final_time=1, half_widths=(1.0,),
                         dx=(0.1,), dt=0.01, boundary=("open",),
                         datum=gaussian_datum)
    horizon = SimulationConfig.horizon(1.0, 0.2, half_widths=(60.0,), dx=(0.05,),
                                       dt=0.01, boundary=("zero",),
                                       datum=gaussian_datum)
    assert horizon.final_time == pytest.approx(25.0)


def test_divisor_time_step():
    dt = divisor_time_step(0.008, 0.00615, 100.0)
    assert dt <= 0.00615
    steps = 100.0 / dt
    assert abs(steps - round(steps)) < 1e-9
    assert divisor_time_step(0.008, 0.02, 25.0) == pytest.approx(0.008)


def test_symmetric_axis_covers_half_width():
    origin, count = symmetric_axis(5.0, 0.4)
    axis = origin + 0.4 * np.arange(count)
    assert count % 2 == 1
    assert axis[0] <= -5.0 + 1e-12 and axis[-1] >= 5.0 - 1e-12
    assert abs(axis[count // 2]) < 1e-14


def test_constant_medium_validate():
    m = make_constant_medium(2.0, 2)
    m.validate()
    with pytest.raises(ValueError):
        make_constant_medium(0.0, 1)
