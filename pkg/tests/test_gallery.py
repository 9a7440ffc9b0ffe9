import numpy as np
import pytest

from maxop import gallery
from maxop.basis import Basis
from maxop.grid import Domain
from maxop.weights import ainfty_constant


def test_constant_and_step():
    d = Domain((8,), h=1 / 8)
    assert np.all(gallery.constant(d, 2.5).values == 2.5)
    s = gallery.step(d, 1.0, 4.0, 0.25).values
    assert s.tolist() == [1, 1, 4, 4, 4, 4, 4, 4]
    with pytest.raises(ValueError):
        gallery.step(d, -1.0)


def test_power_closed_form():
    d = Domain((8,), h=1 / 8)
    x = (np.arange(8) + 0.5) / 8
    np.testing.assert_allclose(gallery.power(d, 0.5).values, np.abs(x - 0.5) ** 0.5, rtol=1e-15)
    np.testing.assert_allclose(gallery.power(d, 2.0, center=0.25).values, (x - 0.25) ** 2, rtol=1e-14)
    with pytest.raises(ValueError):
        gallery.power(d, -0.5, center=1 / 16)


def test_power_two_dimensional_default_center():
    d = Domain((4, 4), h=0.25)
    v = gallery.power(d, 1.0).values
    c = (np.arange(4) + 0.5) / 4 - 0.5
    np.testing.assert_allclose(v, np.hypot(c[:, None], c[None, :]), rtol=1e-15)


def test_lognormal_is_seeded():
    d = Domain((16, 16))
    a = gallery.lognormal(d, 1.0, rng=4, smooth=2).values
    b = gallery.lognormal(d, 1.0, rng=4, smooth=2).values
    assert np.array_equal(a, b) and np.all(a > 0)


def test_non_ainfty_degenerates():
    vals = []
    for N in (16, 64, 256):
        d = Domain((N,), h=1 / N)
        w = gallery.non_ainfty(d)
        assert w.values[0] == pytest.approx(1 / N)
        vals.append(ainfty_constant(w, Basis("dyadic", d)).value)
    assert vals[0] < vals[1] < vals[2]


def test_generate_dispatch():
    d = Domain((8,))
    assert np.array_equal(gallery.generate("step", d, low=2, high=3).values,
                          gallery.step(d, 2, 3).values)
    with pytest.raises(ValueError):
        gallery.generate("zigzag", d)
