"""Coded-link Monte Carlo: BER points and waterfall-SNR search.

A trial is one codeword: random information bits are encoded, the coded
bits pass through a block interleaver, consecutive groups of M bits select
constellation symbols (most significant label bit first), the channel adds
complex Gaussian noise (and, for the fading channel, per-symbol Rayleigh
gains known to the receiver), the demapper produces bit LLRs, and the LDPC
decoder returns information-bit decisions.  Errors are counted on the
information bits only.

Every trial draws from its own seed stream derived from ``(seed, trial
index)``, and the stopping rule is applied at trial granularity after the
fact, so results are bit-identical regardless of batch size or how trials
are distributed across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..capacity import AWGN, Snr, shannon_snr
from .demap import demap_llr

DEFAULT_MIN_ERRORS = 100
DEFAULT_MAX_BITS = 20_000_000
_BATCH_TRIALS = 60


class WaterfallSearchError(ValueError):
    """Raised when no threshold crossing exists inside the scan range."""


def interleaver_permutation(n_bits, bits_per_symbol):
    """Block-interleaver permutation ``out = bits[perm]``.

    Coded bits are written row-wise into an ``M x (n_bits / M)`` array and
    read column-wise: code bit ``b`` lands on bit position ``b // depth`` of
    symbol ``b % depth``, so adjacent code bits hit the same bit position of
    consecutive symbols and the ``M`` bits inside one symbol sit ``depth``
    positions apart in the codeword.
    """
    if n_bits % bits_per_symbol:
        raise ValueError(
            f"codeword length {n_bits} is not a multiple of {bits_per_symbol}"
        )
    depth = n_bits // bits_per_symbol
    return np.arange(n_bits).reshape(bits_per_symbol, depth).T.ravel()


class PassthroughCode:
    """Rate-1 stand-in code: hard decisions on raw LLRs (uncoded link)."""

    def __init__(self, n):
        self.n = int(n)
        self.k = int(n)
        self.rate = 1.0

    def encode(self, info_bits):
        return np.asarray(info_bits, dtype=np.uint8)

    def decode(self, llrs, max_iterations=None):
        llrs = np.asarray(llrs)
        bits = (llrs < 0).astype(np.uint8)
        if llrs.ndim == 1:
            return bits, True
        return bits, np.ones(llrs.shape[0], dtype=bool)


@dataclass(frozen=True)
class BerPoint:
    """One measured link operating point.

    Attributes:
        snr_db: Signal-to-noise ratio in dB.
        bit_errors: Information-bit errors accumulated before stopping.
        bits_simulated: Information bits compared.
        ber: ``bit_errors / bits_simulated``.
        half_width: Half-width of the normal-approximation 95% confidence
            interval for the BER.
        trials: Codeword trials included in the counts.
    """

    snr_db: float
    bit_errors: int
    bits_simulated: int
    ber: float
    half_width: float
    trials: int


def _trial_errors(constellation, code, channel, snr, seed, trial_indices,
                  demap_mode, max_iterations):
    """Information-bit error count for each listed trial (vectorized batch)."""
    bits = constellation.bits_per_symbol
    symbols_per_word = code.n // bits
    batch = len(trial_indices)
    info = np.empty((batch, code.k), dtype=np.uint8)
    noise = np.empty((batch, symbols_per_word), dtype=np.complex128)
    fading = np.empty((batch, symbols_per_word), dtype=np.complex128) if channel.is_fading else None
    scale = np.sqrt(1.0 / (2.0 * snr.linear))
    for row, trial in enumerate(trial_indices):
        rng = np.random.default_rng(np.random.SeedSequence([seed, int(trial)]))
        info[row] = rng.integers(0, 2, size=code.k, dtype=np.uint8)
        gaussians = rng.standard_normal((symbols_per_word, 2))
        noise[row] = scale * (gaussians[:, 0] + 1j * gaussians[:, 1])
        if fading is not None:
            gains = rng.standard_normal((symbols_per_word, 2))
            fading[row] = (gains[:, 0] + 1j * gains[:, 1]) / np.sqrt(2.0)
    codewords = code.encode(info)
    perm = interleaver_permutation(code.n, bits)
    interleaved = codewords[:, perm]
    weights = 1 << np.arange(bits - 1, -1, -1)
    labels = interleaved.reshape(batch, symbols_per_word, bits) @ weights
    transmitted = constellation.points[labels]
    received = (transmitted if fading is None else fading * transmitted) + noise
    llr_symbol = demap_llr(
        received.ravel(), constellation, snr,
        fading=None if fading is None else fading.ravel(), mode=demap_mode,
    ).reshape(batch, code.n)
    llr_code = np.empty_like(llr_symbol)
    llr_code[:, perm] = llr_symbol
    decoded, _ = code.decode(llr_code, max_iterations=max_iterations)
    return (decoded != info).sum(axis=1)


def simulate_ber(constellation, code, channel=AWGN, snr_db=10.0, *,
                 min_errors=DEFAULT_MIN_ERRORS, max_bits=DEFAULT_MAX_BITS,
                 seed=0, demap_mode="exact", max_iterations=None, workers=1):
    """Estimate the coded information-bit error rate at one SNR.

    Codeword trials run until the cumulative error count reaches
    ``min_errors`` or the information-bit budget ``max_bits`` is exhausted,
    whichever happens first.  The rule is applied in trial order to the
    per-trial counts, so the result does not depend on batch size or worker
    count.

    Args:
        constellation: Unit-power transmit alphabet.
        code: An :class:`~nucshape.linksim.ldpc.LdpcCode` (or any object
            with ``n``, ``k``, ``encode`` and ``decode``); the codeword
            length must be a multiple of ``bits_per_symbol``.
        channel: AWGN or the Rayleigh fading channel model.
        snr_db: Operating point in dB.
        min_errors: Stop once this many information-bit errors accumulate.
        max_bits: Hard cap on information bits simulated.
        seed: Base seed; trial ``t`` uses the stream ``(seed, t)``.
        demap_mode: ``"exact"`` or ``"max_log"``.
        max_iterations: Optional decoder iteration override.
        workers: Thread count for concurrent trial batches.

    Returns:
        A :class:`BerPoint`.
    """
    if code.n % constellation.bits_per_symbol:
        raise ValueError(
            f"codeword length {code.n} is not a multiple of "
            f"{constellation.bits_per_symbol} bits per symbol"
        )
    snr = Snr.from_db(snr_db)
    max_trials = max(1, int(np.ceil(max_bits / code.k)))
    errors_by_trial = []
    next_trial = 0

    def run_batch(start, count):
        trials = range(start, min(start + count, max_trials))
        return _trial_errors(constellation, code, channel, snr, seed,
                             list(trials), demap_mode, max_iterations)

    while next_trial < max_trials:
        if workers > 1:
            starts = []
            while len(starts) < workers and next_trial < max_trials:
                starts.append(next_trial)
                next_trial += _BATCH_TRIALS
            with ThreadPoolExecutor(max_workers=workers) as pool:
                batches = list(pool.map(lambda s: run_batch(s, _BATCH_TRIALS), starts))
            errors_by_trial.extend(np.concatenate(batches))
        else:
            errors_by_trial.extend(run_batch(next_trial, _BATCH_TRIALS))
            next_trial += _BATCH_TRIALS
        cumulative = np.cumsum(errors_by_trial)
        if cumulative[-1] >= min_errors:
            break
    counts = np.asarray(errors_by_trial)
    cumulative = np.cumsum(counts)
    reached = np.flatnonzero(cumulative >= min_errors)
    stop = int(reached[0]) + 1 if reached.size else min(counts.size, max_trials)
    bit_errors = int(cumulative[stop - 1])
    bits_simulated = stop * code.k
    ber = bit_errors / bits_simulated
    half_width = 1.96 * float(np.sqrt(max(ber * (1.0 - ber), 0.0) / bits_simulated))
    return BerPoint(float(snr_db), bit_errors, bits_simulated, ber, half_width, stop)


@dataclass(frozen=True)
class WaterfallResult:
    """Outcome of a threshold-crossing SNR search.

    Attributes:
        snr_db: Midpoint of the final bracket.
        bracket_db: ``(low, high)`` SNRs whose BERs straddle the threshold.
        bracket_ber: BERs at the bracket edges (above, below the threshold).
        threshold: The BER level that was crossed.
        tol_db: Bracket width at which bisection stopped.
        points: Every :class:`BerPoint` evaluated, in evaluation order.
        backend: Tag identifying how the result was measured.
    """

    snr_db: float
    bracket_db: tuple
    bracket_ber: tuple
    threshold: float
    tol_db: float
    points: tuple = field(repr=False)
    backend: str = "link_sim"


def _point_seed(seed, snr_db):
    """Content-derived per-point seed: identical SNRs reuse identical draws."""
    snr_bits = int(np.float64(snr_db).view(np.uint64))
    return np.random.SeedSequence([int(seed), snr_bits]).generate_state(1)[0]


def find_waterfall(constellation, code, channel=AWGN, *, threshold=1e-4,
                   tol_db=0.05, seed=0, start_db=None, scan_db=(-5.0, 35.0),
                   scan_step=0.5, min_errors=DEFAULT_MIN_ERRORS, max_bits=None,
                   demap_mode="exact", max_iterations=None, workers=1):
    """Find the SNR where the coded BER falls through ``threshold``.

    Walks outward in ``scan_step`` increments from a starting guess until
    the threshold is bracketed, then bisects the bracket down to ``tol_db``.
    Each SNR point derives its seed from the point's value, so evaluations
    are reproducible and searches at tighter tolerances revisit identical
    measurements (nested brackets).

    Args:
        constellation: Unit-power transmit alphabet.
        code: Forward error correction code for the link.
        channel: AWGN or Rayleigh fading.
        threshold: Target information-bit error rate.
        tol_db: Final bracket width.
        seed: Base seed for the per-point streams.
        start_db: Optional initial SNR guess; default is a capacity-based
            estimate for the code rate.
        scan_db: Inclusive SNR range the walk may explore.
        scan_step: Outward walk increment in dB.
        min_errors: Per-point stopping count.
        max_bits: Per-point information-bit budget; defaults to
            ``ceil(50 / threshold)`` so points near the threshold resolve it.
        demap_mode: ``"exact"`` or ``"max_log"``.
        max_iterations: Optional decoder iteration override.
        workers: Thread count forwarded to :func:`simulate_ber`.

    Returns:
        A :class:`WaterfallResult`.

    Raises:
        WaterfallSearchError: If the BER never crosses the threshold inside
            ``scan_db``.
    """
    if not 0.0 < threshold < 0.5:
        raise ValueError(f"threshold must be in (0, 0.5), got {threshold}")
    low, high = float(scan_db[0]), float(scan_db[1])
    if max_bits is None:
        max_bits = int(np.ceil(50.0 / threshold))
    points = []

    def measure(snr_db):
        snr_db = round(float(snr_db), 9)
        point = simulate_ber(
            constellation, code, channel, snr_db,
            min_errors=min_errors, max_bits=max_bits,
            seed=_point_seed(seed, snr_db), demap_mode=demap_mode,
            max_iterations=max_iterations, workers=workers,
        )
        points.append(point)
        return point

    if start_db is None:
        bits = constellation.bits_per_symbol
        target = code.rate * bits + 0.1 * bits * (1.0 - code.rate)
        start_db = shannon_snr(target).db + (1.0 if not channel.is_fading else 4.0)
    current = float(np.clip(start_db, low, high))
    walk_db, walk_ber = current, measure(current).ber
    step = float(scan_step)
    direction = 1.0 if walk_ber >= threshold else -1.0
    while (walk_ber >= threshold) == (direction > 0):
        next_db = walk_db + direction * step
        if not low - 1e-12 <= next_db <= high + 1e-12:
            raise WaterfallSearchError(
                f"BER stays on one side of {threshold:g} within "
                f"[{low:g}, {high:g}] dB"
            )
        next_ber = measure(next_db).ber
        if direction > 0:
            lo_db, ber_lo, hi_db, ber_hi = walk_db, walk_ber, next_db, next_ber
        else:
            lo_db, ber_lo, hi_db, ber_hi = next_db, next_ber, walk_db, walk_ber
        walk_db, walk_ber = next_db, next_ber
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        point = measure(mid)
        if point.ber >= threshold:
            lo_db, ber_lo = mid, point.ber
        else:
            hi_db, ber_hi = mid, point.ber
    return WaterfallResult(
        snr_db=0.5 * (lo_db + hi_db),
        bracket_db=(lo_db, hi_db),
        bracket_ber=(ber_lo, ber_hi),
        threshold=threshold,
        tol_db=tol_db,
        points=tuple(points),
    )
