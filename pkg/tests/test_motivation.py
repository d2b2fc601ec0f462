"""Closed-form probe: quadratic blowup of time-domain masking vs bounded
error of spectral masking on band-limited toy data."""

import numpy as np
import pytest

from sild import motivation as mv
from sild.spectral import fourier_basis


def build(seed=0, n=30, T=16, b1=(5, 6, 7), b2=(1, 2), **kw):
    return mv.build_toy_dataset(n, T, b1, b2, seed=seed, **kw)


def test_dc_band_gives_constant_trajectories():
    data = build(b1=(0,), b2=(4,))
    spread = data.invariant.max(axis=1) - data.invariant.min(axis=1)
    assert spread.max() < 1e-12


def test_nyquist_band_alternates_sign():
    data = build(b1=(0,), b2=(8,))
    ratio = data.variant[:, 1:] / data.variant[:, :-1]
    np.testing.assert_allclose(ratio, -1.0, atol=1e-9)


def test_spectral_energy_confined_to_bands():
    data = build(seed=1)
    z1, z2 = mv.node_spectra(data)
    T = data.T
    out1 = [k for k in range(T) if k not in data.band_invariant]
    out2 = [k for k in range(T) if k not in data.band_variant]
    assert np.abs(z1[:, out1]).max() < 1e-9
    assert np.abs(z2[:, out2]).max() < 1e-9


def test_bands_closed_under_conjugation():
    data = build()
    for band in (data.band_invariant, data.band_variant):
        assert {(data.T - k) % data.T for k in band} == set(band)


def test_overlapping_bands_rejected_when_disjoint_requested():
    with pytest.raises(ValueError, match="overlap"):
        build(b1=(2, 3), b2=(3, 5))
    data = build(b1=(2, 3), b2=(3, 5), disjoint=False)  # allowed explicitly
    assert set(data.band_invariant) & set(data.band_variant)


def test_noiseless_regression_without_variant_part():
    data = build(seed=2)
    clean = mv.ToyBandDataset(invariant=data.invariant,
                              variant=np.zeros_like(data.variant),
                              weights=data.weights, labels=data.labels,
                              band_invariant=data.band_invariant,
                              band_variant=data.band_variant)
    w = mv.optimal_time_classifier(clean, np.ones(data.T))
    assert mv.time_training_risk(clean, np.ones(data.T), w) < 1e-9


def test_single_node_interpolates_exactly():
    data = build(seed=3, n=1)
    m = np.ones(data.T)
    w = mv.optimal_time_classifier(data, m)
    assert mv.time_training_risk(data, m, w) < 1e-18


def test_training_risk_matches_normal_equations_oracle():
    for seed in range(5):
        data = build(seed=seed)
        m = np.ones(data.T)
        w = mv.optimal_time_classifier(data, m)
        design = data.mixed() * m[None, :]
        gram = design.T @ design
        rhs = design.T @ data.labels
        w_ne, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
        risk_ne = float(np.mean((design @ w_ne - data.labels) ** 2))
        assert abs(mv.time_training_risk(data, m, w) - risk_ne) < 1e-9


def test_ood_curve_baseline_is_squared_offset():
    data = build(seed=4)
    m = np.ones(data.T)
    w = mv.optimal_time_classifier(data, m)
    curve = mv.ood_error_curve(w, m, data.weights, data.invariant[0], [0.0])
    assert curve.errors[0] == pytest.approx(curve.offset ** 2, rel=1e-12)


def test_ood_curve_matches_closed_form():
    data = build(seed=5)
    m = np.ones(data.T)
    w = mv.optimal_time_classifier(data, m)
    alphas = [0.0, 0.5, 3.0, 50.0]
    curve = mv.ood_error_curve(w, m, data.weights, data.invariant[0], alphas)
    for a, err in zip(curve.alphas, curve.errors):
        closed = (a * curve.quad_norm + curve.offset) ** 2
        assert err == pytest.approx(closed, rel=1e-9)


def test_ood_curve_quadratic_ratio_for_adversarial_probe():
    for seed in range(10):
        data = build(seed=seed)
        m = np.ones(data.T)
        w = mv.optimal_time_classifier(data, m)
        assert np.linalg.norm(m * w) > 1e-3
        curve = mv.ood_error_curve(w, m, data.weights, np.zeros(data.T),
                                   [1e2, 1e3])
        ratio = curve.errors[1] / curve.errors[0]
        assert 99.0 <= ratio <= 101.0


def test_ood_curve_monotone_beyond_vertex():
    data = build(seed=6)
    m = np.ones(data.T)
    w = mv.optimal_time_classifier(data, m)
    curve0 = mv.ood_error_curve(w, m, data.weights, data.invariant[0], [0.0])
    vertex = max(0.0, -curve0.offset / curve0.quad_norm)
    alphas = vertex + np.linspace(0, 100, 25)
    curve = mv.ood_error_curve(w, m, data.weights, data.invariant[0], alphas)
    assert np.all(np.diff(curve.errors) >= -1e-12)


def test_ood_curve_leading_coefficient_is_norm_fourth_power():
    for seed in range(10):
        data = build(seed=seed + 20)
        m = np.ones(data.T)
        w = mv.optimal_time_classifier(data, m)
        mw_norm2 = float((m * w) @ (m * w))
        if mw_norm2 < 1e-6:
            continue
        alphas = np.array([0.0, 1.0, 2.0])
        curve = mv.ood_error_curve(w, m, data.weights, data.invariant[0], alphas)
        coeffs = np.polyfit(alphas, curve.errors, deg=2)
        assert coeffs[0] == pytest.approx(mw_norm2 ** 2, rel=1e-6)


def test_zero_norm_mask_reports_trivial_predictor():
    data = build(seed=7)
    w = mv.optimal_time_classifier(data, np.ones(data.T))
    curve = mv.ood_error_curve(w, np.zeros(data.T), data.weights,
                               data.invariant[0], [1.0, 10.0])
    assert curve.trivial
    y = data.weights @ data.invariant[0]
    np.testing.assert_allclose(curve.errors, y * y)


def test_disjoint_band_mask_construction():
    data = build(seed=8, b1=(0,), b2=(8,))
    mask = mv.disjoint_band_mask(data)
    expected = np.ones(16)
    expected[8] = 0.0  # zero exactly at the Nyquist bin
    np.testing.assert_array_equal(mask, expected)

    no_variant = mv.ToyBandDataset(invariant=data.invariant,
                                   variant=np.zeros_like(data.variant),
                                   weights=data.weights, labels=data.labels,
                                   band_invariant=data.band_invariant,
                                   band_variant=())
    np.testing.assert_array_equal(mv.disjoint_band_mask(no_variant), np.ones(16))


def test_disjoint_band_mask_energy_bookkeeping():
    data = build(seed=9)
    mask = mv.disjoint_band_mask(data)
    z1, z2 = mv.node_spectra(data)
    variant_energy = (np.abs(z2) ** 2).sum()
    invariant_energy = (np.abs(z1) ** 2).sum()
    assert (np.abs(z2 * mask) ** 2).sum() < 1e-18 * variant_energy
    assert (np.abs(z1 * mask) ** 2).sum() == pytest.approx(invariant_energy,
                                                           rel=1e-12)


def test_disjoint_band_mask_rejects_overlap():
    data = build(b1=(2, 3), b2=(3, 5), disjoint=False)
    with pytest.raises(ValueError, match="disjoint frequency bands"):
        mv.disjoint_band_mask(data)


def test_proof_construction_coefficients_have_zero_risk():
    data = build(seed=10)
    mask = mv.disjoint_band_mask(data)
    phi = fourier_basis(data.T).complex_matrix
    # predictions (mask*z)^T a with a = conj(Phi g) realize g.d1 exactly
    a = np.conj(phi @ data.weights)
    assert mv.spectral_training_risk(data, mask, a) < 1e-18
    errors = mv.spectral_classifier_error(data, mask, [1.0, 1e3], coefficients=a)
    assert errors.max() < 1e-9


def test_spectral_probe_error_bounded_to_huge_scales():
    for seed in range(10):
        data = build(seed=seed + 40)
        mask = mv.disjoint_band_mask(data)
        alphas = [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6]
        errors = mv.spectral_classifier_error(data, mask, alphas)
        assert errors.max() < 1e-6


def test_overlapping_bands_negative_control_grows():
    data = build(seed=11, b1=(2, 3), b2=(3, 5), disjoint=False)
    ones = np.ones(data.T)
    errors = mv.spectral_classifier_error(data, ones, [1.0, 1e3])
    assert errors[1] > 1e3 * errors[0]
    assert errors[1] > errors[0]


def test_time_and_spectral_fits_agree_under_all_ones_masks():
    for seed in range(5):
        data = build(seed=seed + 60)
        ones = np.ones(data.T)
        w = mv.optimal_time_classifier(data, ones)
        a = mv.optimal_spectral_classifier(data, ones)
        risk_t = mv.time_training_risk(data, ones, w)
        risk_s = mv.spectral_training_risk(data, ones, a)
        assert abs(risk_t - risk_s) < 1e-9


def test_odd_length_rejected():
    with pytest.raises(ValueError, match="even"):
        mv.build_toy_dataset(5, 15, (1,), (2,))
