"""Transform exactness: unitarity, round trips, Parseval, polar form."""

import numpy as np
import pytest

from sild import autograd as ag
from sild.autograd import Tensor
from sild.spectral import (SpectrumTensor, amplitude_phase, fft_time,
                           fourier_basis, ifft_time)


def naive_dft(h):
    """Direct O(T^2) sum with explicit exponentials; basis-independent oracle."""
    h = np.asarray(h, dtype=np.float64)
    T = h.shape[0]
    out = np.zeros((T,) + h.shape[1:], dtype=np.complex128)
    for k in range(T):
        for t in range(T):
            out[k] += np.exp(-2j * np.pi * k * t / T) / np.sqrt(T) * h[t]
    return out


def test_length_one_basis_is_identity():
    b = fourier_basis(1)
    np.testing.assert_array_equal(b.real_part, [[1.0]])
    np.testing.assert_array_equal(b.imag_part, [[0.0]])


def test_zero_length_rejected():
    with pytest.raises(ValueError):
        fourier_basis(0)


def test_t4_entry_analytic():
    b = fourier_basis(4)
    # angle -2*pi*1*1/4 = -pi/2, scaled by 1/sqrt(4)
    assert b.real_part[1, 1] == pytest.approx(0.0, abs=1e-15)
    assert b.imag_part[1, 1] == pytest.approx(-0.5, abs=1e-15)


@pytest.mark.parametrize("T", [1, 2, 3, 5, 8, 16, 33, 64])
def test_basis_is_unitary(T):
    phi = fourier_basis(T).complex_matrix
    gram = np.conj(phi.T) @ phi
    assert np.abs(gram - np.eye(T)).max() < 1e-12


def test_constant_signal_concentrates_at_dc():
    T, c = 8, 2.5
    z = fft_time(Tensor(np.full((T, 2, 3), c)))
    vals = z.values()
    assert np.abs(vals[0] - np.sqrt(T) * c).max() < 1e-12
    assert np.abs(vals[1:]).max() < 1e-12


def test_unit_impulse_is_flat():
    T = 8
    h = np.zeros((T, 1, 1))
    h[0] = 1.0
    vals = fft_time(Tensor(h)).values()
    assert np.abs(vals - 1.0 / np.sqrt(T)).max() < 1e-12


def test_matches_naive_dft_sum():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((16, 3, 2))
    z = fft_time(Tensor(h))
    assert np.abs(z.values() - naive_dft(h)).max() < 1e-9


def test_roundtrip_identity():
    rng = np.random.default_rng(1)
    h = rng.standard_normal((12, 4, 3))
    back = ifft_time(fft_time(Tensor(h)))
    assert np.abs(back.data - h).max() < 1e-9


def test_zero_spectrum_inverts_to_zero():
    z = SpectrumTensor(Tensor(np.zeros((5, 2, 2))), Tensor(np.zeros((5, 2, 2))))
    assert np.abs(ifft_time(z).data).max() == 0.0


def test_conjugate_symmetry_of_real_input_spectra():
    rng = np.random.default_rng(2)
    h = rng.standard_normal((10, 3, 2))
    vals = fft_time(Tensor(h)).values()
    for k in range(1, 10):
        assert np.abs(vals[k] - np.conj(vals[10 - k])).max() < 1e-9


def test_imaginary_residue_reported_for_asymmetric_spectrum():
    rng = np.random.default_rng(3)
    re = rng.standard_normal((6, 2, 2))
    im = rng.standard_normal((6, 2, 2))
    z = SpectrumTensor(Tensor(re), Tensor(im))
    _, residue = ifft_time(z, return_residual=True)
    assert residue > 0.1  # generic asymmetric spectrum leaves real residue

    h = rng.standard_normal((6, 2, 2))
    _, residue = ifft_time(fft_time(Tensor(h)), return_residual=True)
    assert residue < 1e-9


def test_parseval_energy_identity():
    rng = np.random.default_rng(4)
    for seed in range(5):
        h = np.random.default_rng(seed).standard_normal((9, 3, 4))
        z = fft_time(Tensor(h))
        time_energy = (h ** 2).sum()
        spec_energy = (z.re.data ** 2 + z.im.data ** 2).sum()
        assert abs(time_energy - spec_energy) < 1e-9 * time_energy


def test_transform_linearity():
    rng = np.random.default_rng(5)
    h1 = rng.standard_normal((8, 2, 3))
    h2 = rng.standard_normal((8, 2, 3))
    a, b = 1.7, -0.4
    lhs = fft_time(Tensor(a * h1 + b * h2)).values()
    rhs = a * fft_time(Tensor(h1)).values() + b * fft_time(Tensor(h2)).values()
    assert np.abs(lhs - rhs).max() < 1e-9


def test_fft_rejects_nonfinite():
    h = np.zeros((4, 1, 1))
    h[2] = np.nan
    with pytest.raises(FloatingPointError):
        fft_time(Tensor(h))


def test_ifft_rejects_bin_mismatch():
    z = fft_time(Tensor(np.zeros((4, 1, 1))))
    with pytest.raises(ValueError):
        ifft_time(z, basis=fourier_basis(5))


def test_amplitude_phase_analytic_point():
    z = SpectrumTensor(Tensor(np.full((1, 1, 1), 3.0)),
                       Tensor(np.full((1, 1, 1), 4.0)))
    amp, phase = amplitude_phase(z)
    assert amp[0, 0, 0] == pytest.approx(5.0, abs=1e-15)
    assert phase[0, 0, 0] == pytest.approx(0.9272952180016122, abs=1e-12)


def test_amplitude_phase_zero_convention():
    z = SpectrumTensor(Tensor(np.zeros((2, 1, 1))), Tensor(np.zeros((2, 1, 1))))
    amp, phase = amplitude_phase(z)
    assert amp.max() == 0.0
    assert phase.max() == 0.0


def test_polar_reconstruction():
    rng = np.random.default_rng(6)
    z = SpectrumTensor(Tensor(rng.standard_normal((7, 3, 2))),
                       Tensor(rng.standard_normal((7, 3, 2))))
    amp, phase = amplitude_phase(z)
    recon = amp * (np.cos(phase) + 1j * np.sin(phase))
    assert np.abs(recon - z.values()).max() < 1e-9


def test_gradients_flow_through_transforms_as_linear_maps():
    rng = np.random.default_rng(7)
    h = rng.standard_normal((6, 2, 2))
    w_re = Tensor(rng.standard_normal((6, 2, 2)))
    w_im = Tensor(rng.standard_normal((6, 2, 2)))

    def f(t):
        z = fft_time(t)
        return ag.sum_(z.re * w_re) + ag.sum_(z.im * w_im)

    assert ag.grad_check(f, h) < 1e-7

    w_t = Tensor(rng.standard_normal((6, 2, 2)))

    def f_round(t):
        return ag.sum_(ifft_time(fft_time(t)) * w_t)

    assert ag.grad_check(f_round, h) < 1e-7
