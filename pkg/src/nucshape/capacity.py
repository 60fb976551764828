"""Parallel-decoding (bit-metric) capacity of labeled constellations.

The figure of merit is the sum over label bit positions of the mutual
information between that bit and the channel output, assuming independent
per-bit demapping.  For an alphabet X of size ``2**M`` with unit average
power over a channel with signal-to-noise ratio S it equals

    C = M - sum_m E_{b,y}[ log2( sum_{x in X} p(y|x)
                                 / sum_{x in X_b^m} p(y|x) ) ]

where ``X_b^m`` is the subset of points whose label has bit value ``b`` at
position ``m``.  Two estimators are provided: a deterministic tensor
Gauss-Hermite quadrature (AWGN only) and a seeded Monte-Carlo estimator that
also covers i.i.d. Rayleigh fading with receiver-known coefficients.

Conventions: the transmit alphabet has unit average power and the complex
noise has total variance ``1/S`` (``1/(2S)`` per real component).  Fading
coefficients are unit-power circular Gaussian, so the envelope is
Rayleigh-distributed with ``E[|h|^2] = 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_LN2 = math.log(2.0)
_MC_BLOCK = 8192
DEFAULT_MC_BUDGET = 200_000
DEFAULT_QUAD_NODES = 16

AWGN_KIND = "awgn"
RAYLEIGH_KIND = "rayleigh_iid"


class UnsupportedCombinationError(ValueError):
    """Raised when an estimator does not support the requested channel."""


class InfeasibleTargetError(ValueError):
    """Raised when a capacity target cannot be met by the alphabet."""


@dataclass(frozen=True)
class Snr:
    """A signal-to-noise ratio stored as a linear power ratio."""

    linear: float

    def __post_init__(self):
        if not self.linear > 0.0 or not math.isfinite(self.linear):
            raise ValueError(f"SNR must be positive and finite, got {self.linear}")

    @property
    def db(self):
        return 10.0 * math.log10(self.linear)

    @classmethod
    def from_db(cls, value_db):
        return cls(10.0 ** (value_db / 10.0))


@dataclass(frozen=True)
class ChannelModel:
    """A memoryless channel: pure AWGN or receiver-known Rayleigh fading."""

    kind: str = AWGN_KIND

    def __post_init__(self):
        if self.kind not in (AWGN_KIND, RAYLEIGH_KIND):
            raise ValueError(f"unknown channel kind {self.kind!r}")

    @property
    def is_fading(self):
        return self.kind == RAYLEIGH_KIND


AWGN = ChannelModel(AWGN_KIND)
RAYLEIGH = ChannelModel(RAYLEIGH_KIND)


@dataclass(frozen=True)
class CapacityEstimate:
    """A capacity value in bits plus the uncertainty of its estimator.

    ``std_error`` is the sample standard error for Monte-Carlo estimates and
    0 for deterministic quadrature.  ``sample_count`` counts channel-output
    samples (Monte Carlo) or quadrature grid evaluations.
    """

    value: float
    std_error: float
    method: str
    sample_count: int


def _as_snr(snr):
    return snr if isinstance(snr, Snr) else Snr(float(snr))


def shannon_capacity(snr):
    """AWGN channel capacity ``log2(1 + S)`` in bits per symbol."""
    return math.log2(1.0 + _as_snr(snr).linear)


def shannon_snr(target_bits):
    """Inverse of :func:`shannon_capacity`: the SNR achieving ``target_bits``."""
    if target_bits <= 0.0:
        raise InfeasibleTargetError(f"capacity target must be > 0, got {target_bits}")
    return Snr(2.0**target_bits - 1.0)


def transition_logpdf(y, x, snr, fading=None):
    """Log channel transition density ``log p(y | x, h)``.

    Args:
        y: Received complex samples.
        x: Transmitted complex points (broadcastable against ``y``).
        snr: Linear SNR or :class:`Snr`; the noise variance is ``1/S``.
        fading: Optional receiver-known complex coefficients (1 when absent).

    Returns:
        Array of natural-log density values, fully normalized.
    """
    s = _as_snr(snr).linear
    mean = np.asarray(x) if fading is None else np.asarray(fading) * np.asarray(x)
    return math.log(s / math.pi) - s * np.abs(np.asarray(y) - mean) ** 2


def _bit_subset_matrix(bits_per_symbol):
    """(N, 2M) 0/1 matrix; column ``2m + b`` selects ``X_b^m``."""
    size = 1 << bits_per_symbol
    labels = np.arange(size)
    matrix = np.zeros((size, 2 * bits_per_symbol))
    for m in range(bits_per_symbol):
        bits = (labels >> (bits_per_symbol - 1 - m)) & 1
        matrix[bits == 0, 2 * m] = 1.0
        matrix[bits == 1, 2 * m + 1] = 1.0
    return matrix


def _log_ratio_sums(logp, labels, subset_matrix, bits_per_symbol):
    """Per-sample sum over bit positions of the capacity log-ratio terms.

    ``logp[j, l]`` holds ``-S |y_j - h_j x_l|^2`` (a shared additive constant
    cancels between numerator and denominator).  Returns the per-sample sums
    in bits; every value is non-negative.
    """
    shift = logp.max(axis=1, keepdims=True)
    scaled = np.exp(logp - shift)
    log_total = np.log(scaled.sum(axis=1))
    subset = (scaled @ subset_matrix).reshape(-1, bits_per_symbol, 2)
    positions = np.arange(bits_per_symbol)
    bits = (labels[:, None] >> (bits_per_symbol - 1 - positions)) & 1
    chosen = np.take_along_axis(subset, bits[:, :, None], axis=2)[:, :, 0]
    return (bits_per_symbol * log_total - np.log(chosen).sum(axis=1)) / _LN2


def _mc_block_rng(seed, channel, block_index):
    entropy = [int(seed), 0 if channel.kind == AWGN_KIND else 1, int(block_index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _mc_block_sums(points, bits_per_symbol, snr, channel, subset_matrix,
                   seed, block_index, block_size):
    """Partial sums (sum_T, sum_T2, n) for one fixed-size sample block."""
    rng = _mc_block_rng(seed, channel, block_index)
    labels = rng.integers(0, points.size, size=block_size)
    noise = rng.standard_normal((block_size, 2))
    noise = (noise[:, 0] + 1j * noise[:, 1]) * math.sqrt(0.5 / snr.linear)
    if channel.is_fading:
        gains = rng.standard_normal((block_size, 2))
        fading = (gains[:, 0] + 1j * gains[:, 1]) / math.sqrt(2.0)
        received = fading * points[labels] + noise
        mean = fading[:, None] * points[None, :]
    else:
        received = points[labels] + noise
        mean = points[None, :]
    logp = -snr.linear * np.abs(received[:, None] - mean) ** 2
    terms = _log_ratio_sums(logp, labels, subset_matrix, bits_per_symbol)
    return float(terms.sum()), float(np.square(terms).sum()), terms.size


def _monte_carlo_capacity(constellation, snr, channel, budget, seed, workers):
    bits = constellation.bits_per_symbol
    subset_matrix = _bit_subset_matrix(bits)
    blocks = []
    offset = 0
    index = 0
    while offset < budget:
        blocks.append((index, min(_MC_BLOCK, budget - offset)))
        offset += blocks[-1][1]
        index += 1

    def run(block):
        block_index, block_size = block
        return _mc_block_sums(constellation.points, bits, snr, channel,
                              subset_matrix, seed, block_index, block_size)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, blocks))
    else:
        partials = [run(block) for block in blocks]
    total = 0.0
    total_sq = 0.0
    count = 0
    for part_sum, part_sq, part_count in partials:
        total += part_sum
        total_sq += part_sq
        count += part_count
    mean = total / count
    variance = max(total_sq - total * total / count, 0.0) / (count - 1)
    return CapacityEstimate(
        value=max(bits - mean, 0.0),
        std_error=math.sqrt(variance / count),
        method="monte_carlo",
        sample_count=count,
    )


def _mirror_symmetric_labels(constellation):
    """First-quadrant labels if the alphabet is mirror-symmetric, else None.

    Mirror symmetry here means flipping label bit 0 negates the real part
    and flipping label bit 1 negates the imaginary part, with all other
    label bits unchanged.  Both shipped labelings are constructed this way.
    Under it, the transmit average of the capacity integrand is identical
    across the four sign variants of a point, so averaging the labels whose
    top two bits are zero suffices (exactly — the check requires bitwise
    point equality).
    """
    bits = constellation.bits_per_symbol
    if bits < 2:
        return None
    points = constellation.points
    labels = np.arange(points.size)
    re_flipped = points[labels ^ (1 << (bits - 1))]
    im_flipped = points[labels ^ (1 << (bits - 2))]
    if not (np.array_equal(re_flipped, -np.conj(points))
            and np.array_equal(im_flipped, np.conj(points))):
        return None
    return labels[(labels >> (bits - 2)) == 0]


def _quadrature_capacity(constellation, snr, nodes_per_axis):
    bits = constellation.bits_per_symbol
    points = constellation.points
    transmit_labels = _mirror_symmetric_labels(constellation)
    if transmit_labels is None:
        transmit_labels = np.arange(points.size)
    subset_matrix = _bit_subset_matrix(bits)
    nodes, weights = np.polynomial.hermite.hermgauss(nodes_per_axis)
    offsets = ((nodes[:, None] + 1j * nodes[None, :]) / math.sqrt(snr.linear)).ravel()
    node_weights = (weights[:, None] * weights[None, :]).ravel() / math.pi
    grid = offsets.size
    chunk = max(1, 8192 // grid)
    acc = 0.0
    for start in range(0, transmit_labels.size, chunk):
        batch = transmit_labels[start : start + chunk]
        received = (points[batch][:, None] + offsets[None, :]).ravel()
        logp = -snr.linear * np.abs(received[:, None] - points[None, :]) ** 2
        labels = np.repeat(batch, grid)
        terms = _log_ratio_sums(logp, labels, subset_matrix, bits)
        acc += float(np.sum(terms.reshape(batch.size, grid) @ node_weights))
    value = bits - acc / transmit_labels.size
    return CapacityEstimate(
        value=max(value, 0.0),
        std_error=0.0,
        method="quadrature",
        sample_count=transmit_labels.size * grid,
    )


def bicm_capacity(constellation, snr, channel=AWGN, method="auto", budget=None,
                  seed=0, workers=1):
    """Estimate the parallel-decoding capacity of a labeled alphabet.

    Args:
        constellation: Unit average power :class:`~nucshape.constellation.Constellation`.
        snr: Linear SNR or :class:`Snr`.
        channel: :class:`ChannelModel` (default AWGN).
        method: ``"auto"`` (quadrature on AWGN, Monte Carlo otherwise),
            ``"quadrature"`` or ``"monte_carlo"``.
        budget: Monte-Carlo sample count (default 200000) or quadrature nodes
            per real axis (default 16).
        seed: Seed for the Monte-Carlo sample tree.  Estimates are
            bit-identical for equal seeds and independent of ``workers``.
        workers: Number of threads over fixed sample blocks.

    Returns:
        A :class:`CapacityEstimate` with value in [0, M].
    """
    snr = _as_snr(snr)
    if abs(constellation.average_power() - 1.0) > 1e-9:
        raise ValueError("constellation must be normalized to unit average power")
    if method == "auto":
        method = "quadrature" if channel.kind == AWGN_KIND else "monte_carlo"
    if method == "quadrature":
        if channel.kind != AWGN_KIND:
            raise UnsupportedCombinationError(
                "quadrature supports only the AWGN channel; use monte_carlo"
            )
        return _quadrature_capacity(constellation, snr,
                                    int(budget or DEFAULT_QUAD_NODES))
    if method == "monte_carlo":
        return _monte_carlo_capacity(constellation, snr, channel,
                                     int(budget or DEFAULT_MC_BUDGET),
                                     seed, int(workers))
    raise ValueError(f"unknown capacity method {method!r}")


def shortfall_bits(constellation, snr, channel=AWGN, **estimator_kwargs):
    """Gap in bits between Shannon capacity and the alphabet's capacity.

    Clipped at zero, which only triggers when a Monte-Carlo estimate
    stochastically exceeds the Shannon value.
    """
    snr = _as_snr(snr)
    estimate = bicm_capacity(constellation, snr, channel, **estimator_kwargs)
    return max(shannon_capacity(snr) - estimate.value, 0.0)


def snr_for_capacity(constellation, target_bits, channel=AWGN, tol_db=0.01,
                     bracket_db=(-20.0, 60.0), **estimator_kwargs):
    """SNR at which the alphabet's capacity reaches ``target_bits``.

    Bisects the monotone capacity curve on a dB bracket until the bracket
    width falls below ``tol_db``.

    Raises:
        InfeasibleTargetError: If ``target_bits`` is outside (0, M) or is not
            bracketed by the capacity values at the bracket edges.
    """
    bits = constellation.bits_per_symbol
    if target_bits <= 0.0:
        raise InfeasibleTargetError(f"capacity target must be > 0, got {target_bits}")
    if target_bits >= bits:
        raise InfeasibleTargetError(
            f"capacity target {target_bits} is not reachable with {bits} bit labels"
        )

    def value_at(db):
        estimate = bicm_capacity(constellation, Snr.from_db(db), channel,
                                 **estimator_kwargs)
        return estimate.value

    low, high = bracket_db
    if value_at(low) > target_bits or value_at(high) < target_bits:
        raise InfeasibleTargetError(
            f"target {target_bits} bits is not bracketed on [{low}, {high}] dB"
        )
    while high - low > tol_db:
        mid = 0.5 * (low + high)
        if value_at(mid) >= target_bits:
            high = mid
        else:
            low = mid
    return Snr.from_db(0.5 * (low + high))


def shortfall_db(constellation, target_bits, channel=AWGN, tol_db=0.01,
                 **estimator_kwargs):
    """Horizontal (dB) gap to Shannon at a fixed capacity target.

    The SNR needed by the alphabet to reach ``target_bits`` minus the SNR at
    which the Shannon capacity reaches the same target.
    """
    achieved = snr_for_capacity(constellation, target_bits, channel,
                                tol_db=tol_db, **estimator_kwargs)
    return achieved.db - shannon_snr(target_bits).db


def capacity_curve(constellation, snr_grid, channel=AWGN, **estimator_kwargs):
    """Capacity estimates over an SNR grid.

    Returns:
        A list of ``(Snr, CapacityEstimate)`` rows, one per grid entry.
    """
    rows = []
    for snr in snr_grid:
        snr = _as_snr(snr)
        rows.append((snr, bicm_capacity(constellation, snr, channel,
                                        **estimator_kwargs)))
    return rows
