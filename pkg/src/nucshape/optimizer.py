"""Derivative-free shaping of constellations for capacity targets.

The objective is a weighted sum of parallel-decoding capacities at one or
more (channel, SNR) targets.  It is maximized by cyclic coordinate descent
over the free shape parameters: each coordinate is probed with symmetric
relative steps, the best strictly improving probe is accepted, and all steps
shrink geometrically whenever a full sweep accepts nothing.

Evaluation uses common random numbers: the Monte-Carlo sample tree depends
only on the seed, channel and sample-block index, never on the candidate
alphabet or the SNR, so every candidate in a run is scored on the same
noise/fading draws and acceptance decisions are deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .capacity import AWGN_KIND, ChannelModel, Snr, bicm_capacity
from .constellation import (
    DegenerateAlphabetError,
    ShapeParams,
    dof,
    expand,
    extract_params,
    uniform_qam,
)

INNER_MC_BUDGET = 50_000


@dataclass(frozen=True)
class DesignTarget:
    """One (channel, SNR) operating point with a positive weight."""

    channel: ChannelModel
    snr: Snr
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0.0:
            raise ValueError(f"target weight must be > 0, got {self.weight}")


@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs of the coordinate-descent search.

    Attributes:
        initial_step: Probe size as a fraction of the current coordinate.
        step_shrink: Multiplier applied to the step after a sweep without
            any accepted probe.
        min_step: Search stops once the step falls below this fraction.
        max_sweeps: Hard cap on coordinate sweeps.
        method: Capacity estimator: ``"auto"`` picks quadrature when every
            target is AWGN and Monte Carlo otherwise; ``"per_target"``
            scores each target with its natural estimator — exact
            quadrature on the default grid for AWGN targets, Monte Carlo
            for fading targets — so mixed objectives carry no avoidable
            noise.
        budget: Estimator budget; ``None`` means 16 quadrature nodes per
            axis or 50000 Monte-Carlo symbols (a lighter inner-loop default
            than the standalone estimator's 200000).  Under ``"per_target"``
            the budget applies to the Monte-Carlo targets only.
        seed: Root seed of the common-random-number sample tree.
        workers: Threads for Monte-Carlo sample blocks.
        random_restarts: Extra searches from perturbed starting points; the
            best final objective wins.  Off by default.
        trace_path: Optional JSON-lines file receiving one record per
            accepted step: {sweep, coordinate, step, objective}.
    """

    initial_step: float = 0.25
    step_shrink: float = 0.5
    min_step: float = 1e-4
    max_sweeps: int = 200
    method: str = "auto"
    budget: int | None = None
    seed: int = 0
    workers: int = 1
    random_restarts: int = 0
    trace_path: str | None = None

    def __post_init__(self):
        if not 0.0 < self.min_step < self.initial_step:
            raise ValueError(
                f"need 0 < min_step < initial_step, got {self.min_step} "
                f"and {self.initial_step}"
            )
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError(f"step_shrink must be in (0, 1), got {self.step_shrink}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if self.random_restarts < 0:
            raise ValueError(
                f"random_restarts must be >= 0, got {self.random_restarts}"
            )


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    """Outcome of a shaping run.

    ``converged`` is False when the sweep cap stopped the search before the
    step size reached ``min_step``; the result still holds the best
    parameters seen.
    """

    constellation: object
    params: ShapeParams
    objective: float
    converged: bool
    sweeps: int
    evaluations: int
    accepted: list = field(default_factory=list)


def _resolve_estimator(targets, options):
    """Per-target (method, budget) plan implied by the options."""
    method = options.method
    if method not in ("auto", "quadrature", "monte_carlo", "per_target"):
        raise ValueError(f"unknown method {options.method!r}")
    if method == "auto":
        all_awgn = all(t.channel.kind == AWGN_KIND for t in targets)
        method = "quadrature" if all_awgn else "monte_carlo"
    mc_budget = INNER_MC_BUDGET if options.budget is None else options.budget
    if method == "per_target":
        return [("quadrature", None) if t.channel.kind == AWGN_KIND
                else ("monte_carlo", mc_budget) for t in targets]
    if method == "monte_carlo":
        return [("monte_carlo", mc_budget)] * len(targets)
    return [("quadrature", options.budget)] * len(targets)


def _weighted_capacity(constellation, targets, plan, options):
    total = 0.0
    for target, (method, budget) in zip(targets, plan):
        estimate = bicm_capacity(constellation, target.snr, target.channel,
                                 method=method, budget=budget,
                                 seed=options.seed, workers=options.workers)
        total += target.weight * estimate.value
    return total


def objective(params, bits_per_symbol, targets, options=None):
    """Weighted-sum capacity of the expanded alphabet at the targets."""
    options = options or OptimizerOptions()
    plan = _resolve_estimator(targets, options)
    constellation = expand(params, bits_per_symbol)
    return _weighted_capacity(constellation, targets, plan, options)


def optimize_1d(bits_per_symbol, targets, options=None):
    """Shape the positive per-axis levels of a symmetric square grid."""
    return _coordinate_descent("nuqam_1d", bits_per_symbol, targets, options)


def optimize_2d(bits_per_symbol, targets, options=None):
    """Shape the free first-quadrant points of a quadrant-symmetric set."""
    return _coordinate_descent("nuqam_2d", bits_per_symbol, targets, options)


def _coordinate_descent(kind, bits_per_symbol, targets, options):
    options = options or OptimizerOptions()
    if bits_per_symbol < 2 or bits_per_symbol % 2:
        raise ValueError(
            f"shaping needs an even bits_per_symbol >= 2, got {bits_per_symbol}"
        )
    if not targets:
        raise ValueError("at least one design target is required")
    start = extract_params(uniform_qam(bits_per_symbol), kind).values
    runs = [_single_descent(kind, bits_per_symbol, targets, options, start)]
    if options.random_restarts > 0:
        for restart in range(options.random_restarts):
            rng = np.random.default_rng(
                np.random.SeedSequence([int(options.seed), 977, restart])
            )
            jitter = 1.0 + 0.1 * rng.uniform(-1.0, 1.0, size=start.size)
            perturbed = (np.sort(start * jitter) if kind == "nuqam_1d"
                         else start * jitter)
            try:
                runs.append(_single_descent(kind, bits_per_symbol, targets,
                                            options, perturbed))
            except ValueError:
                continue
    return max(runs, key=lambda result: result.objective)


def _single_descent(kind, bits_per_symbol, targets, options, start_values):
    trace = open(options.trace_path, "a") if options.trace_path else None
    plan = _resolve_estimator(targets, options)
    evaluations = 0

    def evaluate(values):
        nonlocal evaluations
        try:
            candidate = expand(ShapeParams(kind, values), bits_per_symbol)
        except (ValueError, DegenerateAlphabetError):
            return None
        evaluations += 1
        return _weighted_capacity(candidate, targets, plan, options)

    try:
        values = np.array(start_values, dtype=float)
        current = evaluate(values)
        if current is None:
            raise ValueError("starting parameters are infeasible")
        if dof(kind, 1 << bits_per_symbol) == 0:
            params = ShapeParams(kind, values)
            return OptimizationResult(expand(params, bits_per_symbol), params,
                                      current, True, 0, evaluations, [])
        step = options.initial_step
        sweeps = 0
        accepted_log = []
        converged = False
        while sweeps < options.max_sweeps:
            if step < options.min_step:
                converged = True
                break
            sweeps += 1
            sweep_accepted = False
            for coordinate in range(values.size):
                base = values[coordinate]
                best = None
                for delta in (base * step, -base * step):
                    candidate = values.copy()
                    candidate[coordinate] = base + delta
                    score = evaluate(candidate)
                    if score is None:
                        continue
                    key = (score, -abs(delta), delta < 0.0)
                    if best is None or key > best[0]:
                        best = (key, delta, candidate)
                if best is not None and best[0][0] > current:
                    _, delta, candidate = best
                    values = candidate
                    current = best[0][0]
                    sweep_accepted = True
                    record = {"sweep": sweeps, "coordinate": coordinate,
                              "step": step, "objective": current}
                    accepted_log.append(record)
                    if trace is not None:
                        trace.write(json.dumps(record) + "\n")
            if not sweep_accepted:
                step *= options.step_shrink
        converged = converged or step < options.min_step
        params = ShapeParams(kind, values)
        return OptimizationResult(expand(params, bits_per_symbol), params,
                                  current, converged, sweeps, evaluations,
                                  accepted_log)
    finally:
        if trace is not None:
            trace.close()
