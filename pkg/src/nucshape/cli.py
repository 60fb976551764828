"""Batch command-line front-end.

Four subcommands tie the library together:

* ``capacity`` — capacity/shortfall sweeps over an SNR grid.
* ``design``   — single- or multi-channel constellation design.
* ``simulate`` — coded BER sweeps and waterfall searches.
* ``export``   — re-emit a constellation as plot-ready CSV and a figure.

Every run writes its artifacts into ``--out`` together with the echoed
effective configuration (``effective_config.txt``), so re-running that
directory's config reproduces all artifacts byte-for-byte.  Options come
from a flat ``key = value`` config file (``--config``) with command-line
flags taking precedence.

Exit codes: 0 success, 2 usage/config error, 3 numerical infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import pathlib
import sys

import numpy as np

from . import figures
from .capacity import (
    AWGN,
    RAYLEIGH,
    InfeasibleTargetError,
    Snr,
    UnsupportedCombinationError,
    bicm_capacity,
    capacity_curve,
    shannon_capacity,
)
from .constellation import (
    DegenerateAlphabetError,
    load_constellation,
    save_constellation,
    uniform_qam,
)
from .linksim import (
    LdpcCode,
    PassthroughCode,
    WaterfallSearchError,
    find_waterfall,
    shipped_code,
    simulate_ber,
)
from .multichan import (
    DesignProblem,
    InfeasibleRateError,
    design_multichannel,
    waterfall_snr,
)
from .optimizer import DesignTarget, OptimizerOptions, optimize_1d, optimize_2d

_CHANNELS = {"awgn": AWGN, "rayleigh": RAYLEIGH}
_SHAPES = {"uniform": "uniform", "1d": "nuqam_1d", "2d": "nuqam_2d"}
_BACKENDS = {"proxy": "capacity_proxy", "linksim": "link_sim"}


class UsageError(ValueError):
    """Invalid flag/config combination; maps to exit code 2."""


def _parse_config_file(path):
    """Flat ``key = value`` document; ``#`` starts a comment line."""
    values = {}
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise UsageError(f"cannot read config file: {error}") from error
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{number}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _merge(args, config, key, default=None):
    """Flag value if given, else config-file value, else the default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _parse_snr_grid(text):
    """Grid syntax: ``start:stop:step`` (inclusive) or a comma list of dB."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(part) for part in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + index * step, 10) for index in range(count)]
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as error:
        raise UsageError(f"invalid SNR grid {text!r}") from error


def _parse_channels(text):
    names = [part.strip().lower() for part in str(text).split(",") if part.strip()]
    if not names:
        raise UsageError("channel list is empty")
    for name in names:
        if name not in _CHANNELS:
            raise UsageError(f"unknown channel {name!r}; choose from awgn, rayleigh")
    return names


def _coerce(value, kind, key):
    if value is None:
        return None
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            lowered = str(value).strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError
        return kind(value)
    except (TypeError, ValueError) as error:
        raise UsageError(f"invalid value {value!r} for {key}") from error


def _load_source_constellation(effective):
    """Constellation from a JSON file, or built-in uniform from --bits."""
    path = effective.get("constellation")
    if path:
        try:
            alphabet = load_constellation(path)
        except OSError as error:
            raise UsageError(f"cannot read constellation file: {error}") from error
        except (KeyError, TypeError, ValueError) as error:
            if isinstance(error, DegenerateAlphabetError):
                raise
            raise UsageError(f"malformed constellation file: {error}") from error
        return alphabet
    bits = effective.get("bits")
    if bits is None:
        raise UsageError("either --constellation or --bits is required")
    try:
        return uniform_qam(bits)
    except ValueError as error:
        raise UsageError(str(error)) from error


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _echo_config(out_dir, command, effective):
    """Write the sorted effective configuration, excluding the out path."""
    lines = [f"command = {command}"]
    for key in sorted(effective):
        if key == "out":
            continue
        value = effective[key]
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    path = out_dir / "effective_config.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resolve_out(effective):
    out = effective.get("out")
    if not out:
        raise UsageError("--out is required")
    out_dir = pathlib.Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _common_effective(args, config):
    effective = {
        "bits": _coerce(_merge(args, config, "bits"), int, "bits"),
        "shape": _merge(args, config, "shape", "uniform"),
        "channels": _merge(args, config, "channels", "awgn"),
        "seed": _coerce(_merge(args, config, "seed", 0), int, "seed"),
        "workers": _coerce(
            _merge(args, config, "workers", os.cpu_count() or 1), int, "workers"),
        "budget": _coerce(_merge(args, config, "budget"), int, "budget"),
        "constellation": _merge(args, config, "constellation"),
        "out": _merge(args, config, "out"),
    }
    if effective["shape"] not in _SHAPES:
        raise UsageError(f"unknown shape {effective['shape']!r}")
    _parse_channels(effective["channels"])
    return effective


def _cmd_capacity(args, config):
    effective = _common_effective(args, config)
    effective["snr_grid"] = _merge(args, config, "snr_grid")
    effective["method"] = _merge(args, config, "method", "auto")
    if effective["snr_grid"] is None:
        raise UsageError("--snr-grid is required for the capacity command")
    if effective["method"] not in ("auto", "quadrature", "monte_carlo"):
        raise UsageError(f"unknown method {effective['method']!r}")
    grid_db = _parse_snr_grid(effective["snr_grid"])
    channels = _parse_channels(effective["channels"])
    alphabet = _load_source_constellation(effective)
    out_dir = _resolve_out(effective)
    _echo_config(out_dir, "capacity", effective)

    capacity_figures = {}
    shortfall_figures = {}
    for name in channels:
        curve = capacity_curve(
            alphabet, [Snr.from_db(db) for db in grid_db], _CHANNELS[name],
            method=effective["method"], budget=effective["budget"],
            seed=effective["seed"], workers=effective["workers"],
        )
        capacity_rows = [
            (f"{snr.db:.12g}", f"{estimate.value:.12g}", f"{estimate.std_error:.12g}")
            for snr, estimate in curve
        ]
        _write_csv(out_dir / f"capacity_{name}.csv",
                   ["snr_db", "capacity_bits", "std_error"], capacity_rows)
        shortfall_rows = []
        for snr, estimate in curve:
            shannon = shannon_capacity(snr)
            shortfall_rows.append(
                (f"{snr.db:.12g}", f"{shannon:.12g}", f"{estimate.value:.12g}",
                 f"{shannon - estimate.value:.12g}")
            )
        _write_csv(out_dir / f"shortfall_{name}.csv",
                   ["snr_db", "shannon_bits", "capacity_bits", "shortfall_bits"],
                   shortfall_rows)
        snr_db = np.array([snr.db for snr, _ in curve])
        values = np.array([estimate.value for _, estimate in curve])
        capacity_figures[name] = (snr_db, values)
        shortfall_figures[name] = (
            snr_db, np.array([shannon_capacity(snr) for snr, _ in curve]) - values)
    if grid_db:
        figures.plot_capacity_curves(capacity_figures, out_dir / "capacity.png")
        figures.plot_shortfall_curves(shortfall_figures, out_dir / "shortfall.png")
    print(f"capacity: wrote {2 * len(channels)} CSV files to {out_dir}")
    return 0


def _design_summary(alphabet, designed, channels, effective, converged):
    """Per-channel waterfall table comparing uniform against the design."""
    rows = []
    flag = "true" if converged else "false"
    for name in channels:
        uniform_db = waterfall_snr(
            alphabet, effective["rate"], _CHANNELS[name],
            backend=_BACKENDS[effective["backend"]],
            gap_bits=effective["gap_bits"], seed=effective["seed"],
            budget=effective["budget"], workers=effective["workers"],
        )
        designed_db = waterfall_snr(
            designed, effective["rate"], _CHANNELS[name],
            backend=_BACKENDS[effective["backend"]],
            gap_bits=effective["gap_bits"], seed=effective["seed"],
            budget=effective["budget"], workers=effective["workers"],
        )
        rows.append((name, f"{uniform_db:.4f}", f"{designed_db:.4f}",
                     f"{uniform_db - designed_db:.4f}", flag))
    return rows


def _cmd_design(args, config):
    effective = _common_effective(args, config)
    for key, kind, default in (
        ("rate", float, None),
        ("design_snr", str, None),
        ("backend", str, "proxy"),
        ("gap_bits", float, None),
        ("epsilon_db", float, 0.01),
        ("max_iterations", int, 10),
        ("max_sweeps", int, 200),
        ("initial_step", float, 0.25),
        ("min_step", float, 1e-4),
        ("method", str, "auto"),
    ):
        effective[key] = _coerce(_merge(args, config, key, default), kind, key)
    if effective["constellation"]:
        raise UsageError("design builds its own constellation; drop --constellation")
    if effective["bits"] is None:
        raise UsageError("--bits is required for the design command")
    if effective["shape"] not in _SHAPES:
        raise UsageError(f"unknown shape {effective['shape']!r}")
    if effective["backend"] not in _BACKENDS:
        raise UsageError(f"unknown backend {effective['backend']!r}")
    if effective["method"] not in ("auto", "quadrature", "monte_carlo",
                                   "per_target"):
        raise UsageError(f"unknown method {effective['method']!r}")
    channels = _parse_channels(effective["channels"])
    fixed_mode = effective["design_snr"] is not None
    if not fixed_mode and effective["rate"] is None:
        raise UsageError("--rate is required unless --design-snr fixes the targets")
    out_dir = _resolve_out(effective)
    _echo_config(out_dir, "design", effective)

    shape_kind = _SHAPES[effective["shape"]]
    options = OptimizerOptions(
        initial_step=effective["initial_step"], min_step=effective["min_step"],
        max_sweeps=effective["max_sweeps"], method=effective["method"],
        budget=effective["budget"], seed=effective["seed"],
        workers=effective["workers"],
    )
    bits = effective["bits"]
    converged = True
    trace = None
    if fixed_mode:
        snrs = [float(part) for part in str(effective["design_snr"]).split(",")]
        if len(snrs) == 1:
            snrs = snrs * len(channels)
        if len(snrs) != len(channels):
            raise UsageError("--design-snr needs one value, or one per channel")
        targets = [DesignTarget(_CHANNELS[name], Snr.from_db(db))
                   for name, db in zip(channels, snrs)]
        if shape_kind == "uniform":
            designed = uniform_qam(bits)
        else:
            optimize = optimize_1d if shape_kind == "nuqam_1d" else optimize_2d
            result = optimize(bits, targets, options)
            designed = result.constellation
            converged = result.converged
    else:
        problem = DesignProblem(
            bits_per_symbol=bits, code_rate=effective["rate"],
            channels=tuple(_CHANNELS[name] for name in channels),
            shape_kind=shape_kind,
            waterfall_backend=_BACKENDS[effective["backend"]],
            epsilon_db=effective["epsilon_db"],
            max_iterations=effective["max_iterations"],
            gap_bits=effective["gap_bits"],
            waterfall_budget=effective["budget"],
        )
        result = design_multichannel(problem, options)
        designed = result.constellation
        converged = result.converged
        trace = result.trace
    save_constellation(designed, out_dir / "constellation.json")
    if trace is not None:
        trace.save(out_dir / "trace.json")
        figures.plot_design_trace(trace, out_dir / "trace.png",
                                  channel_names=channels)
    else:
        with open(out_dir / "trace.json", "w", encoding="utf-8") as handle:
            json.dump({"iterations": []}, handle, indent=1)
            handle.write("\n")
    figures.plot_constellation(designed, out_dir / "constellation.png")
    if effective["rate"] is not None:
        rows = _design_summary(uniform_qam(bits), designed, channels,
                               effective, converged)
        _write_csv(out_dir / "summary.csv",
                   ["channel", "uniform_waterfall_db", "designed_waterfall_db",
                    "gain_db", "converged"], rows)
    if not converged:
        print("warning: design stopped before convergence; best iterate kept",
              file=sys.stderr)
    print(f"design: wrote constellation.json to {out_dir}")
    return 0


def _load_code(effective):
    choice = effective.get("code")
    if choice is None:
        raise UsageError("--code is required (1/2, 3/5, an .alist path, or none)")
    if choice in ("1/2", "3/5"):
        return shipped_code(choice)
    if choice == "none":
        return None
    try:
        return LdpcCode.from_alist(choice)
    except OSError as error:
        raise UsageError(f"cannot read code file: {error}") from error


def _cmd_simulate(args, config):
    effective = _common_effective(args, config)
    for key, kind, default in (
        ("code", str, None),
        ("snr_grid", str, None),
        ("waterfall", bool, False),
        ("threshold", float, 1e-4),
        ("tol_db", float, 0.05),
        ("min_errors", int, 100),
        ("max_bits", int, None),
        ("demap_mode", str, "exact"),
    ):
        effective[key] = _coerce(_merge(args, config, key, default), kind, key)
    if effective["demap_mode"] not in ("exact", "max_log"):
        raise UsageError(f"unknown demap mode {effective['demap_mode']!r}")
    if effective["snr_grid"] is None and not effective["waterfall"]:
        raise UsageError("simulate needs --snr-grid, --waterfall, or both")
    channels = _parse_channels(effective["channels"])
    alphabet = _load_source_constellation(effective)
    code = _load_code(effective)
    if code is None:
        code = PassthroughCode(120 * alphabet.bits_per_symbol)
    if code.n % alphabet.bits_per_symbol:
        raise UsageError(
            f"codeword length {code.n} is not a multiple of "
            f"{alphabet.bits_per_symbol} bits per symbol")
    out_dir = _resolve_out(effective)
    _echo_config(out_dir, "simulate", effective)

    max_bits = effective["max_bits"]
    ber_figures = {}
    for name in channels:
        if effective["snr_grid"] is not None:
            grid_db = _parse_snr_grid(effective["snr_grid"])
            rows = []
            for snr_db in grid_db:
                point = simulate_ber(
                    alphabet, code, _CHANNELS[name], snr_db,
                    min_errors=effective["min_errors"],
                    max_bits=max_bits if max_bits else 20_000_000,
                    seed=effective["seed"], demap_mode=effective["demap_mode"],
                    workers=effective["workers"],
                )
                rows.append((f"{point.snr_db:.12g}", f"{point.ber:.12g}",
                             f"{point.half_width:.12g}", str(point.bits_simulated)))
            _write_csv(out_dir / f"ber_{name}.csv",
                       ["snr_db", "ber", "half_width", "bits"], rows)
            ber_figures[name] = (np.array(grid_db),
                                 np.array([float(row[1]) for row in rows]))
        if effective["waterfall"]:
            result = find_waterfall(
                alphabet, code, _CHANNELS[name],
                threshold=effective["threshold"], tol_db=effective["tol_db"],
                seed=effective["seed"], min_errors=effective["min_errors"],
                max_bits=max_bits, demap_mode=effective["demap_mode"],
                workers=effective["workers"],
            )
            payload = {
                "channel": name,
                "snr_db": round(result.snr_db, 6),
                "bracket_db": [round(value, 6) for value in result.bracket_db],
                "bracket_ber": list(result.bracket_ber),
                "threshold": result.threshold,
                "tol_db": result.tol_db,
                "points": [
                    {"snr_db": point.snr_db, "ber": point.ber,
                     "half_width": point.half_width, "bits": point.bits_simulated}
                    for point in result.points
                ],
            }
            with open(out_dir / f"waterfall_{name}.json", "w",
                      encoding="utf-8") as handle:
                json.dump(payload, handle, indent=1)
                handle.write("\n")
            searched = sorted(result.points, key=lambda point: point.snr_db)
            ber_figures[f"{name} search"] = (
                np.array([point.snr_db for point in searched]),
                np.array([point.ber for point in searched]))
            print(f"waterfall[{name}]: {result.snr_db:.3f} dB")
    if ber_figures:
        figures.plot_ber_curves(ber_figures, out_dir / "ber.png",
                                threshold=effective["threshold"]
                                if effective["waterfall"] else None)
    print(f"simulate: wrote results to {out_dir}")
    return 0


def _cmd_export(args, config):
    effective = _common_effective(args, config)
    alphabet = _load_source_constellation(effective)
    out_dir = _resolve_out(effective)
    _echo_config(out_dir, "export", effective)
    save_constellation(alphabet, out_dir / "constellation.json")
    bits = alphabet.bits_per_symbol
    rows = [
        (str(label), format(label, f"0{bits}b"),
         f"{point.real:.12g}", f"{point.imag:.12g}")
        for label, point in enumerate(alphabet.points)
    ]
    _write_csv(out_dir / "points.csv", ["label", "bits", "re", "im"], rows)
    figures.plot_constellation(alphabet, out_dir / "constellation.png")
    print(f"export: wrote points.csv to {out_dir}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nucshape",
        description="Constellation shaping toolkit: capacity, design, simulation.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub):
        sub.add_argument("--config", help="flat key = value config file")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--bits", type=int, help="label bits per symbol")
        sub.add_argument("--shape", choices=sorted(_SHAPES),
                         help="constellation family")
        sub.add_argument("--channels", help="comma list: awgn, rayleigh")
        sub.add_argument("--constellation", help="constellation JSON file")
        sub.add_argument("--budget",
                         type=int, help="estimator budget (samples or nodes)")
        sub.add_argument("--seed", type=int, help="base random seed")
        sub.add_argument("--workers", type=int, help="parallel worker count")

    sub = subparsers.add_parser("capacity", help="capacity/shortfall sweep")
    add_common(sub)
    sub.add_argument("--snr-grid", dest="snr_grid",
                     help="start:stop:step or comma list, in dB")
    sub.add_argument("--method", choices=["auto", "quadrature", "monte_carlo"])
    sub.set_defaults(run=_cmd_capacity)

    sub = subparsers.add_parser("design", help="optimize a constellation")
    add_common(sub)
    sub.add_argument("--rate", type=float, help="code rate in (0, 1)")
    sub.add_argument("--backend", choices=sorted(_BACKENDS),
                     help="waterfall backend")
    sub.add_argument("--design-snr", dest="design_snr",
                     help="fixed design SNR(s) in dB, comma list per channel")
    sub.add_argument("--gap-bits", dest="gap_bits", type=float,
                     help="capacity-proxy implementation gap")
    sub.add_argument("--epsilon-db", dest="epsilon_db", type=float,
                     help="loop stop tolerance (dB)")
    sub.add_argument("--max-iterations", dest="max_iterations", type=int)
    sub.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    sub.add_argument("--initial-step", dest="initial_step", type=float)
    sub.add_argument("--min-step", dest="min_step", type=float)
    sub.add_argument("--method",
                     choices=["auto", "quadrature", "monte_carlo", "per_target"])
    sub.set_defaults(run=_cmd_design)

    sub = subparsers.add_parser("simulate", help="coded BER / waterfall search")
    add_common(sub)
    sub.add_argument("--code", help="1/2, 3/5, an .alist path, or none")
    sub.add_argument("--snr-grid", dest="snr_grid",
                     help="start:stop:step or comma list, in dB")
    sub.add_argument("--waterfall", action="store_const", const=True,
                     default=None, help="run a threshold-crossing search")
    sub.add_argument("--threshold", type=float, help="waterfall BER threshold")
    sub.add_argument("--tol-db", dest="tol_db", type=float,
                     help="waterfall bisection tolerance")
    sub.add_argument("--min-errors", dest="min_errors", type=int)
    sub.add_argument("--max-bits", dest="max_bits", type=int)
    sub.add_argument("--demap-mode", dest="demap_mode",
                     choices=["exact", "max_log"])
    sub.set_defaults(run=_cmd_simulate)

    sub = subparsers.add_parser("export", help="emit plot-ready constellation data")
    add_common(sub)
    sub.set_defaults(run=_cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _parse_config_file(args.config) if args.config else {}
        return args.run(args, config)
    except UsageError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except (DegenerateAlphabetError, UnsupportedCombinationError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except (InfeasibleTargetError, InfeasibleRateError,
            WaterfallSearchError) as error:
        print(f"infeasible: {error}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
