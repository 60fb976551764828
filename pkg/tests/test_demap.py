"""Tests for exact, max-log and per-axis soft demapping."""

import numpy as np
import pytest

from nucshape.capacity import Snr, bicm_capacity
from nucshape.constellation import ShapeParams, expand, uniform_qam
from nucshape.linksim import demap_llr, demap_llr_per_axis


def test_bpsk_llr_closed_form():
    snr = Snr.from_db(6.0)
    received = np.array([0.9 + 0.2j, -0.4 - 1.0j, 0.05 + 0.0j])
    llrs = demap_llr(received, uniform_qam(1), snr)
    assert llrs.shape == (3, 1)
    assert np.allclose(llrs[:, 0], 4.0 * snr.linear * received.real,
                       rtol=0, atol=1e-10)


def test_qpsk_llr_closed_form_and_signs():
    snr = Snr.from_db(5.0)
    received = np.array([0.7 + 0.7j, -0.3 + 0.6j, 0.2 - 0.1j])
    llrs = demap_llr(received, uniform_qam(2), snr)
    amplitude = 1.0 / np.sqrt(2.0)
    assert np.allclose(llrs[:, 0], 4.0 * snr.linear * amplitude * received.real,
                       rtol=0, atol=1e-10)
    assert np.allclose(llrs[:, 1], 4.0 * snr.linear * amplitude * received.imag,
                       rtol=0, atol=1e-10)
    assert llrs[0, 0] > 0 and llrs[0, 1] > 0  # first-quadrant sample favours 00
    assert llrs[1, 0] < 0 < llrs[1, 1]


def test_max_log_equals_exact_for_singleton_subsets():
    snr = Snr.from_db(4.0)
    rng = np.random.default_rng(0)
    received = rng.normal(size=50) + 1j * rng.normal(size=50)
    for bits in (1, 2):
        alphabet = uniform_qam(bits)
        exact = demap_llr(received, alphabet, snr, mode="exact")
        approx = demap_llr(received, alphabet, snr, mode="max_log")
        assert np.allclose(exact, approx, rtol=0, atol=1e-12)


def test_max_log_matches_exact_sign_when_confident():
    snr = Snr.from_db(15.0)
    alphabet = uniform_qam(6)
    rng = np.random.default_rng(1)
    symbols = alphabet.points[rng.integers(0, 64, size=2000)]
    noise = (rng.normal(size=2000) + 1j * rng.normal(size=2000)) * np.sqrt(
        0.5 / snr.linear)
    received = symbols + noise
    exact = demap_llr(received, alphabet, snr, mode="exact")
    approx = demap_llr(received, alphabet, snr, mode="max_log")
    confident = np.abs(exact) > 1.0
    assert np.all(np.sign(exact[confident]) == np.sign(approx[confident]))
    assert np.all(np.abs(exact - approx) < 1.0)


@pytest.mark.parametrize("alphabet", [
    uniform_qam(2),
    uniform_qam(4),
    uniform_qam(6),
    expand(ShapeParams("nuqam_1d", np.array([0.2, 0.75, 1.0, 1.9])), 6),
])
def test_per_axis_equals_exact(alphabet):
    snr = Snr.from_db(11.0)
    rng = np.random.default_rng(2)
    received = 1.5 * (rng.normal(size=400) + 1j * rng.normal(size=400))
    exact = demap_llr(received, alphabet, snr, mode="exact")
    fast = demap_llr_per_axis(received, alphabet, snr)
    assert np.allclose(fast, exact, rtol=1e-9, atol=1e-8)


def test_per_axis_equals_exact_under_fading():
    alphabet = uniform_qam(4)
    snr = Snr.from_db(9.0)
    rng = np.random.default_rng(3)
    received = rng.normal(size=300) + 1j * rng.normal(size=300)
    fading = (rng.normal(size=300) + 1j * rng.normal(size=300)) / np.sqrt(2.0)
    exact = demap_llr(received, alphabet, snr, fading=fading, mode="exact")
    fast = demap_llr_per_axis(received, alphabet, snr, fading=fading)
    assert np.allclose(fast, exact, rtol=1e-9, atol=1e-8)


def test_fading_equals_derotated_awgn_demap():
    alphabet = uniform_qam(4)
    snr = Snr.from_db(8.0)
    rng = np.random.default_rng(4)
    received = rng.normal(size=100) + 1j * rng.normal(size=100)
    fading = 0.8 * np.exp(1j * rng.uniform(0, 2 * np.pi, size=100))
    faded = demap_llr(received, alphabet, snr, fading=fading)
    gain = np.abs(fading)
    derotated = received * np.conj(fading) / gain**2
    plain = demap_llr(derotated, alphabet, Snr(snr.linear * gain[0] ** 2))
    assert np.allclose(faded, plain, rtol=1e-10, atol=1e-10)


def test_demap_input_validation():
    alphabet = uniform_qam(2)
    received = np.array([0.1 + 0.2j, -0.3 + 0.0j])
    with pytest.raises(ValueError, match="unknown demapper mode"):
        demap_llr(received, alphabet, 10.0, mode="approx")
    with pytest.raises(ValueError, match="must be positive"):
        demap_llr(received, alphabet, 0.0)
    with pytest.raises(ValueError, match="one gain per received sample"):
        demap_llr(received, alphabet, 10.0, fading=np.array([1.0 + 0j]))
    with pytest.raises(ValueError, match="one gain per received sample"):
        demap_llr_per_axis(received, alphabet, 10.0, fading=np.array([1.0 + 0j]))
    with pytest.raises(ValueError, match="must be nonzero"):
        demap_llr_per_axis(received, alphabet, 10.0,
                           fading=np.array([1.0 + 0j, 0.0 + 0j]))


def test_per_axis_rejects_quadrant_labeled_alphabets():
    rng = np.random.default_rng(5)
    values = rng.uniform(0.1, 1.4, size=8)
    quadrant = expand(ShapeParams("nuqam_2d", values), 4)
    with pytest.raises(ValueError, match="square Gray-labeled grid"):
        demap_llr_per_axis(np.array([0.3 + 0.1j]), quadrant, 10.0)
    with pytest.raises(ValueError, match="even number of label bits"):
        demap_llr_per_axis(np.array([0.3 + 0.1j]), uniform_qam(1), 10.0)


def test_llr_mutual_information_matches_capacity():
    # Feeding exact LLRs into the binary-channel identity
    # I_m = 1 - E[log2(1 + exp(-(1-2b) L_m))] must reproduce the
    # parallel-decoding capacity estimated by the capacity module.
    alphabet = uniform_qam(4)
    snr = Snr.from_db(10.0)
    rng = np.random.default_rng(6)
    count = 60_000
    labels = rng.integers(0, alphabet.size, size=count)
    noise = (rng.normal(size=count) + 1j * rng.normal(size=count)) * np.sqrt(
        0.5 / snr.linear)
    received = alphabet.points[labels] + noise
    llrs = demap_llr(received, alphabet, snr)
    total = 0.0
    for position in range(alphabet.bits_per_symbol):
        bit = (labels >> (alphabet.bits_per_symbol - 1 - position)) & 1
        oriented = np.where(bit == 0, llrs[:, position], -llrs[:, position])
        total += 1.0 - np.mean(np.logaddexp(0.0, -oriented)) / np.log(2.0)
    reference = bicm_capacity(alphabet, snr).value
    assert np.isclose(total, reference, rtol=0, atol=0.02)
