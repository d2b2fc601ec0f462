"""Discrete Fourier transform machinery over the time axis of trajectory tensors.

The transform is the unitary two-sided DFT with K = T frequency bins, so the
basis is square and the inverse is its Hermitian transpose. Complex values
are carried as (real, imaginary) pairs of real tensors; gradients flow
through the transforms as plain linear maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor


@dataclass(frozen=True)
class FourierBasis:
    """Unitary DFT basis with entries exp(-2j*pi*k*t/T) / sqrt(T)."""

    T: int
    K: int
    real_part: np.ndarray  # (K, T) = cos(-2 pi k t / T) / sqrt(T)
    imag_part: np.ndarray  # (K, T) = sin(-2 pi k t / T) / sqrt(T)

    @property
    def complex_matrix(self):
        return self.real_part + 1j * self.imag_part


@dataclass
class SpectrumTensor:
    """Complex (K, N, d) spectrum stored as a real/imaginary tensor pair."""

    re: Tensor
    im: Tensor

    @property
    def shape(self):
        return self.re.shape

    def detach(self):
        return SpectrumTensor(self.re.detach(), self.im.detach())

    def values(self):
        """Plain complex ndarray view of the current values."""
        return self.re.data + 1j * self.im.data


def fourier_basis(T, dtype=np.float64):
    if T < 1:
        raise ValueError(f"fourier_basis: need T >= 1, got {T}")
    k = np.arange(T, dtype=np.float64)[:, None]
    t = np.arange(T, dtype=np.float64)[None, :]
    angle = -2.0 * np.pi * k * t / T
    scale = 1.0 / np.sqrt(T)
    return FourierBasis(T=T, K=T,
                        real_part=(np.cos(angle) * scale).astype(dtype),
                        imag_part=(np.sin(angle) * scale).astype(dtype))


def _as_matrix(h):
    T = h.shape[0]
    return ag.reshape(h, (T, -1)) if h.data.ndim != 2 else h


def fft_time(H, basis=None):
    """Transform a (T, N, d) trajectory tensor along time into a spectrum.

    Equivalent to the direct sum Z[k] = sum_t basis[k, t] * H[t] per
    (node, dim); implemented as two real matmuls so gradients are exact.
    """
    if not np.all(np.isfinite(H.data)):
        raise FloatingPointError("fft_time: non-finite trajectory input")
    T = H.shape[0]
    if basis is None:
        basis = fourier_basis(T, dtype=H.dtype)
    if basis.T != T:
        raise ValueError(f"fft_time: basis length {basis.T} != time axis {T}")
    out_shape = (basis.K,) + tuple(H.shape[1:])
    flat = _as_matrix(H)
    re = ag.reshape(ag.matmul(Tensor(basis.real_part), flat), out_shape)
    im = ag.reshape(ag.matmul(Tensor(basis.imag_part), flat), out_shape)
    return SpectrumTensor(re=re, im=im)


def ifft_time(Z, basis=None, return_residual=False):
    """Invert ``fft_time``: H' = (basis^H) Z, keeping the real part.

    For conjugate-symmetric spectra the imaginary residue is numerically
    zero and is dropped; otherwise the real part is still returned and the
    caller can ask for the max imaginary magnitude via ``return_residual``.
    """
    K = Z.shape[0]
    if basis is None:
        basis = fourier_basis(K, dtype=Z.re.dtype)
    if basis.T != K:
        raise ValueError(f"ifft_time: spectrum has {K} bins but basis inverts length {basis.T}")
    out_shape = Z.shape
    re_t = Tensor(basis.real_part.T.copy())
    im_t = Tensor(basis.imag_part.T.copy())
    zre, zim = _as_matrix(Z.re), _as_matrix(Z.im)
    h_re = ag.reshape(ag.matmul(re_t, zre) + ag.matmul(im_t, zim), out_shape)
    if not return_residual:
        return h_re
    h_im = basis.real_part.T @ zim.data - basis.imag_part.T @ zre.data
    return h_re, float(np.abs(h_im).max()) if h_im.size else 0.0


def amplitude_phase(Z):
    """Polar decomposition of a spectrum: (|Z|, arg Z) as plain arrays.

    The phase at zero amplitude is 0 (arctan2(0, 0) convention); any value
    would do since it is only ever multiplied by the zero amplitude.
    """
    re, im = Z.re.data, Z.im.data
    return np.hypot(re, im), np.arctan2(im, re)
