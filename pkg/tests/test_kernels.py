import numpy as np
import pytest

from wavehom import _kernels

try:
    compiled = _kernels.load_backend("compiled")
    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

reference = _kernels.load_backend("reference")

needs_compiled = pytest.mark.skipif(not HAVE_COMPILED,
                                    reason="compiled extension not built")


def _random_1d(rng, n):
    return (rng.standard_normal(n + 4),
            rng.uniform(0.5, 2.0, n + 4),
            rng.uniform(0.5, 2.0, n + 3))


def _random_2d(rng, n1, n2):
    return (rng.standard_normal((n1 + 4, n2 + 4)),
            rng.uniform(0.5, 2.0, (n1 + 4, n2)),
            rng.uniform(0.5, 2.0, (n1 + 3, n2)),
            rng.uniform(0.5, 2.0, (n1, n2 + 4)),
            rng.uniform(0.5, 2.0, (n1, n2 + 3)))


@needs_compiled
def test_apply_1d_backends_agree():
    rng = np.random.default_rng(0)
    u, ai, ah = _random_1d(rng, 33)
    out_r, out_c = np.empty(33), np.empty(33)
    reference.apply_hetero_1d(u, ai, ah, 0.11, out_r)
    compiled.apply_hetero_1d(u, ai, ah, 0.11, out_c)
    assert np.array_equal(out_r, out_c)


@needs_compiled
def test_advance_1d_backends_agree():
    rng = np.random.default_rng(1)
    u, ai, ah = _random_1d(rng, 40)
    v = rng.standard_normal(44)
    for periodic in (False, True):
        up_r, uc_r = u.copy(), v.copy()
        up_c, uc_c = u.copy(), v.copy()
        res_r = reference.advance_hetero_1d(up_r, uc_r, ai, ah, 0.1, 0.01, 9, periodic)
        res_c = compiled.advance_hetero_1d(up_c, uc_c, ai, ah, 0.1, 0.01, 9, periodic)
        assert res_r == res_c == (9, True)
        assert np.array_equal(up_r, up_c)
        assert np.array_equal(uc_r, uc_c)


@needs_compiled
def test_apply_and_advance_2d_backends_agree():
    rng = np.random.default_rng(2)
    u, a0i, a0h, a1i, a1h = _random_2d(rng, 14, 11)
    out_r, out_c = np.empty((14, 11)), np.empty((14, 11))
    reference.apply_hetero_2d(u, a0i, a0h, a1i, a1h, 0.1, 0.2, out_r)
    compiled.apply_hetero_2d(u, a0i, a0h, a1i, a1h, 0.1, 0.2, out_c)
    assert np.array_equal(out_r, out_c)

    v = rng.standard_normal((18, 15))
    up_r, uc_r = u.copy(), v.copy()
    up_c, uc_c = u.copy(), v.copy()
    res_r = reference.advance_hetero_2d(up_r, uc_r, a0i, a0h, a1i, a1h,
                                        0.1, 0.2, 0.005, 6, False, True)
    res_c = compiled.advance_hetero_2d(up_c, uc_c, a0i, a0h, a1i, a1h,
                                       0.1, 0.2, 0.005, 6, False, True)
    assert res_r == res_c == (6, True)
    assert np.array_equal(up_r, up_c)
    assert np.array_equal(uc_r, uc_c)


@pytest.mark.parametrize("backend", [reference] + ([compiled] if HAVE_COMPILED else []))
def test_blowup_detection(backend):
    rng = np.random.default_rng(3)
    u, ai, ah = _random_1d(rng, 24)
    up, uc = u.copy(), rng.standard_normal(28)
    # grossly unstable time step: the advance must stop early and say so
    steps, ok = backend.advance_hetero_1d(up, uc, ai, ah, 0.05, 10.0, 500, True)
    assert not ok
    assert steps < 500


def test_ghost_refresh_periodic():
    u = np.arange(12.0)
    reference.refresh_ghosts_1d(u, True)
    assert u[0] == 8.0 and u[1] == 9.0 and u[10] == 2.0 and u[11] == 3.0
    if HAVE_COMPILED:
        v = np.arange(12.0)
        compiled.refresh_ghosts_1d(v, True)
        assert np.array_equal(u, v)


def test_backend_selection_reports_name():
    assert _kernels.backend() in ("compiled", "reference")
    with pytest.raises(ValueError):
        _kernels.load_backend("nonsense")
