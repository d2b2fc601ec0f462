"""Closed-form probe of time-domain vs spectral masking on band-limited data.

Each toy node has an invariant degree trajectory (spectral support on one
frequency band) and a variant trajectory (support on another band); only the
invariant part drives the label. The probe demonstrates numerically that
any time-domain masked least-squares fit suffers quadratically growing
error as the variant trajectory scales, while a spectral mask that zeroes
the variant band keeps the error bounded whenever the bands are disjoint.

All arithmetic here is 64-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import fourier_basis


@dataclass(frozen=True)
class ToyBandDataset:
    invariant: np.ndarray       # (n, T) trajectories, spectral support band_invariant
    variant: np.ndarray         # (n, T) trajectories, spectral support band_variant
    weights: np.ndarray         # (T,) ground-truth label weights
    labels: np.ndarray          # (n,) = invariant @ weights
    band_invariant: tuple       # closed under k -> (T - k) % T
    band_variant: tuple

    @property
    def T(self):
        return self.invariant.shape[1]

    def mixed(self):
        return self.invariant + self.variant


def _close_band(band, T):
    closed = set()
    for k in band:
        closed.add(k % T)
        closed.add((T - k) % T)
    return tuple(sorted(closed))


def _band_limited(n, T, band, scale, rng):
    """Real signals via inverse DFT of conjugate-symmetric band coefficients."""
    coeff = np.zeros((n, T), dtype=np.complex128)
    for k in band:
        conj_k = (T - k) % T
        if k > conj_k:
            continue
        if k == conj_k:  # DC or Nyquist bins must be real
            coeff[:, k] = rng.standard_normal(n)
        else:
            c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            coeff[:, k] = c
            coeff[:, conj_k] = np.conj(c)
    phi = fourier_basis(T).complex_matrix
    signal = coeff @ np.conj(phi)  # rows: Phi^H coeff per node
    return scale * signal.real


def build_toy_dataset(n_nodes, T, band_invariant, band_variant, scale=1.0,
                      seed=0, disjoint=True):
    """Random toy instance; bands are closed under conjugate pairing first."""
    if T % 2 != 0:
        raise ValueError("toy construction expects an even trajectory length")
    b1 = _close_band(band_invariant, T)
    b2 = _close_band(band_variant, T)
    if disjoint and set(b1) & set(b2):
        raise ValueError(
            f"bands {b1} and {b2} overlap after conjugate closure; "
            "a disjoint instance was requested")
    rng = np.random.default_rng(seed)
    d1 = _band_limited(n_nodes, T, b1, scale, rng)
    d2 = _band_limited(n_nodes, T, b2, scale, rng)
    g = rng.standard_normal(T)
    return ToyBandDataset(invariant=d1, variant=d2, weights=g,
                          labels=d1 @ g, band_invariant=b1, band_variant=b2)


# ---------------------------------------------------------------------------
# time-domain classifier
# ---------------------------------------------------------------------------

def optimal_time_classifier(dataset, mask):
    """Least-squares minimizer of the masked time-domain training risk.

    Pseudo-inverse solution, so it is defined regardless of rank.
    """
    mask = np.asarray(mask, dtype=np.float64)
    design = dataset.mixed() * mask[None, :]
    w, *_ = np.linalg.lstsq(design, dataset.labels, rcond=None)
    return w


def time_training_risk(dataset, mask, w):
    design = dataset.mixed() * np.asarray(mask)[None, :]
    resid = design @ w - dataset.labels
    return float(np.mean(resid * resid))


@dataclass(frozen=True)
class OodCurve:
    alphas: np.ndarray
    errors: np.ndarray
    quad_norm: float       # ||mask * w||^2, the sqrt of the leading coefficient
    offset: float          # residual prediction error of the invariant part
    trivial: bool = False  # masked classifier was identically zero


def ood_error_curve(w, mask, weights, invariant_probe, alphas):
    """Squared error of a probe whose variant trajectory is alpha*(mask*w).

    Direct evaluation; algebraically the curve is
    (alpha*||mask*w||^2 + offset)^2 with
    offset = w.(mask*invariant_probe) - weights.invariant_probe.
    A zero-norm masked classifier has no growth direction, so the trivial
    always-zero predictor case is reported instead of a curve.
    """
    mask = np.asarray(mask, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    mw = mask * w
    norm2 = float(mw @ mw)
    alphas = np.asarray(list(alphas), dtype=np.float64)
    y = float(weights @ invariant_probe)
    if norm2 == 0.0:
        err = np.full(alphas.shape, y * y)
        return OodCurve(alphas=alphas, errors=err, quad_norm=0.0,
                        offset=-y, trivial=True)
    errors = np.empty_like(alphas)
    for i, a in enumerate(alphas):
        probe = invariant_probe + a * mw
        errors[i] = (w @ (mask * probe) - y) ** 2
    offset = float(w @ (mask * invariant_probe) - y)
    return OodCurve(alphas=alphas, errors=errors, quad_norm=norm2, offset=offset)


# ---------------------------------------------------------------------------
# spectral classifier
# ---------------------------------------------------------------------------

def node_spectra(dataset):
    phi = fourier_basis(dataset.T).complex_matrix
    return dataset.invariant @ phi.T, dataset.variant @ phi.T


def disjoint_band_mask(dataset, tol=1e-9):
    """Binary spectral mask: zero wherever any node's variant spectrum has
    energy, one elsewhere. Requires genuinely disjoint band supports."""
    z1, z2 = node_spectra(dataset)
    variant_energy = np.abs(z2).max(axis=0)
    invariant_energy = np.abs(z1).max(axis=0)
    if np.any((variant_energy > tol) & (invariant_energy > tol)):
        raise ValueError(
            "invariant and variant spectral supports overlap; the bounded-"
            "error construction needs disjoint frequency bands")
    return (variant_energy <= tol).astype(np.float64)


def optimal_spectral_classifier(dataset, mask):
    """Complex least-squares fit of predictions conj(w).(mask*z) to labels.

    Returned in the conjugated parametrization a = conj(w), i.e. predictions
    are (mask * z) @ a.
    """
    z1, z2 = node_spectra(dataset)
    design = (z1 + z2) * np.asarray(mask)[None, :]
    a, *_ = np.linalg.lstsq(design, dataset.labels.astype(np.complex128), rcond=None)
    return a


def spectral_training_risk(dataset, mask, a):
    z1, z2 = node_spectra(dataset)
    resid = ((z1 + z2) * np.asarray(mask)[None, :]) @ a - dataset.labels
    return float(np.mean(np.abs(resid) ** 2))


def spectral_classifier_error(dataset, mask, alphas, coefficients=None):
    """Worst-node squared error when every variant spectrum scales by alpha."""
    mask = np.asarray(mask, dtype=np.float64)
    a = optimal_spectral_classifier(dataset, mask) if coefficients is None \
        else coefficients
    z1, z2 = node_spectra(dataset)
    errors = []
    for alpha in alphas:
        pred = ((z1 + alpha * z2) * mask[None, :]) @ a
        errors.append(float(np.max(np.abs(pred - dataset.labels) ** 2)))
    return np.asarray(errors)
