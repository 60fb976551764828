"""Joint constellation design across several channel models.

The operating point of a (constellation, code-rate, channel) triple is its
waterfall SNR: by default the SNR where the bit-metric capacity reaches the
code rate's net bit demand plus a small decoding margin (the capacity
proxy), optionally the SNR where a full coded link simulation crosses a
target bit-error rate.

``design_multichannel`` alternates between measuring the per-channel
waterfalls of the current constellation and re-shaping the constellation
for equally weighted capacity targets placed at exactly those SNRs.  The
loop starts from the uniform constellation, stops once the average
waterfall stops improving, and returns the best constellation seen.  With a
single channel it reduces to plain waterfall-tracking design for that
channel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linksim
from .capacity import AWGN_KIND, ChannelModel, Snr, snr_for_capacity
from .constellation import expand, extract_params, to_dict, uniform_qam
from .optimizer import (
    DesignTarget,
    OptimizerOptions,
    objective,
    optimize_1d,
    optimize_2d,
)


class InfeasibleRateError(ValueError):
    """Raised when a code rate's capacity demand exceeds the label size."""


def default_gap_bits(bits_per_symbol, code_rate):
    """Default decoding margin: 0.1 * M * (1 - R) bits."""
    return 0.1 * bits_per_symbol * (1.0 - code_rate)


def waterfall_snr(constellation, code_rate, channel, backend="capacity_proxy",
                  gap_bits=None, seed=0, budget=None, workers=1,
                  ber_threshold=1e-4, tol_db=0.05, code=None):
    """Operating SNR of a constellation/code-rate pair on a channel, in dB.

    Args:
        constellation: Unit-power labeled alphabet.
        code_rate: FEC code rate R in (0, 1).
        channel: :class:`~nucshape.capacity.ChannelModel`.
        backend: ``"capacity_proxy"`` inverts the capacity curve at the
            target ``R*M + gap_bits``; ``"link_sim"`` measures the coded BER
            waterfall of an LDPC link.
        gap_bits: Decoding margin for the proxy; defaults to
            ``0.1 * M * (1 - R)``.
        seed: Seed for Monte-Carlo estimates / link simulation.
        budget: Monte-Carlo sample budget for proxy estimates on fading
            channels; AWGN proxies always use the default quadrature grid.
        workers: Threads for Monte-Carlo capacity blocks.
        ber_threshold: BER defining the waterfall (link_sim backend).
        tol_db: Waterfall search tolerance (link_sim backend).
        code: Optional LDPC code for link_sim; defaults to the shipped code
            matching ``code_rate``.

    Returns:
        The waterfall SNR in dB.

    Raises:
        InfeasibleRateError: If the proxy target reaches or exceeds M.
    """
    if not 0.0 < code_rate < 1.0:
        raise InfeasibleRateError(f"code rate must be in (0, 1), got {code_rate}")
    bits = constellation.bits_per_symbol
    if backend == "capacity_proxy":
        if gap_bits is None:
            gap_bits = default_gap_bits(bits, code_rate)
        target = code_rate * bits + gap_bits
        if target >= bits:
            raise InfeasibleRateError(
                f"proxy target {target:.3f} bits reaches the {bits}-bit label size"
            )
        if channel.kind == AWGN_KIND:
            budget = None
        snr = snr_for_capacity(constellation, target, channel,
                               seed=seed, budget=budget, workers=workers)
        return snr.db
    if backend == "link_sim":
        if code is None:
            code = linksim.shipped_code(code_rate)
        result = linksim.find_waterfall(constellation, code, channel,
                                        threshold=ber_threshold, tol_db=tol_db,
                                        seed=seed)
        return result.snr_db
    raise ValueError(f"unknown waterfall backend {backend!r}")


@dataclass(frozen=True)
class DesignProblem:
    """A multi-channel shaping task.

    Attributes:
        bits_per_symbol: Label size M.
        code_rate: FEC rate setting the waterfall operating points.
        channels: One or more channel models (repeats allowed).
        shape_kind: ``"uniform"``, ``"nuqam_1d"`` or ``"nuqam_2d"``.
        waterfall_backend: ``"capacity_proxy"`` or ``"link_sim"``.
        epsilon_db: Stop once the average waterfall improves by less.
        max_iterations: Cap on design iterations.
        gap_bits: Proxy margin override (None picks the default).
        waterfall_budget: Monte-Carlo budget for fading-channel waterfall
            measurement; AWGN proxies use the default quadrature grid.
        ber_threshold: Waterfall BER (link_sim backend).
    """

    bits_per_symbol: int
    code_rate: float
    channels: tuple
    shape_kind: str = "nuqam_2d"
    waterfall_backend: str = "capacity_proxy"
    epsilon_db: float = 0.01
    max_iterations: int = 10
    gap_bits: float | None = None
    waterfall_budget: int | None = None
    ber_threshold: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("at least one channel is required")
        for channel in self.channels:
            if not isinstance(channel, ChannelModel):
                raise ValueError(f"expected ChannelModel, got {channel!r}")
        if self.shape_kind not in ("uniform", "nuqam_1d", "nuqam_2d"):
            raise ValueError(f"unknown shape kind {self.shape_kind!r}")
        if not 0.0 < self.code_rate < 1.0:
            raise InfeasibleRateError(
                f"code rate must be in (0, 1), got {self.code_rate}"
            )


@dataclass(frozen=True, eq=False)
class DesignIteration:
    """One design-loop step: the constellation and its measured waterfalls."""

    index: int
    constellation: object
    waterfalls_db: tuple
    average_db: float
    objective: float | None = None


@dataclass(frozen=True, eq=False)
class DesignTrace:
    """Iteration history of :func:`design_multichannel`."""

    iterations: tuple

    def to_dict(self, include_constellations=False, waterfall_decimals=4):
        payload = []
        for record in self.iterations:
            entry = {
                "iteration": record.index,
                "waterfalls_db": [round(w, waterfall_decimals)
                                  for w in record.waterfalls_db],
                "average_db": round(record.average_db, waterfall_decimals),
                "objective": record.objective,
            }
            if include_constellations:
                entry["constellation"] = to_dict(record.constellation)
            payload.append(entry)
        return {"iterations": payload}

    def save(self, path, include_constellations=False, waterfall_decimals=4):
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(include_constellations, waterfall_decimals),
                      handle, indent=1)
            handle.write("\n")


@dataclass(frozen=True, eq=False)
class MultichannelResult:
    """Best constellation of a design run plus the full trace."""

    constellation: object
    trace: DesignTrace
    converged: bool
    best_iteration: int


def _measure_waterfalls(constellation, problem, seed, workers):
    return tuple(
        waterfall_snr(constellation, problem.code_rate, channel,
                      backend=problem.waterfall_backend,
                      gap_bits=problem.gap_bits, seed=seed,
                      budget=problem.waterfall_budget, workers=workers,
                      ber_threshold=problem.ber_threshold)
        for channel in problem.channels
    )


def design_multichannel(problem, options=None):
    """Design one constellation for all channels of a problem.

    Args:
        problem: The :class:`DesignProblem`.
        options: :class:`~nucshape.optimizer.OptimizerOptions` for the inner
            shaping runs (seed, estimator budget, step schedule).

    Returns:
        A :class:`MultichannelResult`; its trace starts with iteration 0
        (the uniform constellation) and the average-waterfall sequence is
        non-increasing up to ``epsilon_db`` until the stop iteration.
    """
    options = options or OptimizerOptions()
    uniform = uniform_qam(problem.bits_per_symbol)
    waterfalls = _measure_waterfalls(uniform, problem, options.seed,
                                     options.workers)
    records = [DesignIteration(0, uniform, waterfalls,
                               float(np.mean(waterfalls)))]
    if problem.shape_kind == "uniform":
        trace = DesignTrace(tuple(records))
        return MultichannelResult(uniform, trace, True, 0)
    optimize = optimize_1d if problem.shape_kind == "nuqam_1d" else optimize_2d
    converged = False
    for iteration in range(1, problem.max_iterations + 1):
        previous = records[-1]
        targets = [DesignTarget(channel, Snr.from_db(wf_db), 1.0)
                   for channel, wf_db in zip(problem.channels,
                                             previous.waterfalls_db)]
        shaped = optimize(problem.bits_per_symbol, targets, options)
        waterfalls = _measure_waterfalls(shaped.constellation, problem,
                                         options.seed, options.workers)
        records.append(DesignIteration(iteration, shaped.constellation,
                                       waterfalls, float(np.mean(waterfalls)),
                                       shaped.objective))
        if previous.average_db - records[-1].average_db < problem.epsilon_db:
            converged = True
            break
    trace = DesignTrace(tuple(records))
    best = min(records, key=lambda record: record.average_db)
    return MultichannelResult(best.constellation, trace, converged,
                              best.index)
