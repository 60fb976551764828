"""Complex constellation alphabets with Gray bit labelings.

A constellation is an ordered set of ``N = 2**M`` complex points where the
index of each point is its M-bit label.  Two labeling families are supported:

* ``gray_square`` -- product labeling for square grids.  The even label bit
  positions (0, 2, ... counting from the most significant bit) address the
  real axis and the odd positions address the imaginary axis; each axis uses
  a binary-reflected Gray code, with bit value 0 on the positive half-axis.
* ``gray_quadrant`` -- quadrant-symmetric labeling for free 2-D point sets.
  The two most significant label bits select the quadrant (0 = positive
  half-axis) and the remaining bits index a set of first-quadrant points
  that is mirrored across both axes.

Shaped alphabets are described compactly by :class:`ShapeParams` and turned
into full unit-power constellations by :func:`expand`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

_LABELINGS = ("gray_square", "gray_quadrant")
_MIN_DISTANCE_FLOOR = 1e-6


class DegenerateAlphabetError(ValueError):
    """Raised when an alphabet collapses (zero power or coincident points)."""


def gray_code(index):
    """Binary-reflected Gray code of ``index`` (scalar or array)."""
    index = np.asarray(index)
    return index ^ (index >> 1)


def gray_decode(code):
    """Inverse of :func:`gray_code` for values below 2**32."""
    code = np.asarray(code).copy()
    for shift in (1, 2, 4, 8, 16):
        code ^= code >> shift
    return code


def label_bit(labels, position, bits_per_symbol):
    """Bit at ``position`` (0 = most significant) of the given labels."""
    return (np.asarray(labels) >> (bits_per_symbol - 1 - position)) & 1


@dataclass(frozen=True, eq=False)
class Constellation:
    """An ordered, labeled alphabet of ``2**bits_per_symbol`` complex points.

    Attributes:
        bits_per_symbol: Number of label bits M, between 1 and 10.
        points: Complex array of length ``2**M``; ``points[l]`` is the symbol
            whose label is ``l``.
        labeling: Either ``"gray_square"`` or ``"gray_quadrant"``.
    """

    bits_per_symbol: int
    points: np.ndarray
    labeling: str = "gray_square"

    def __post_init__(self):
        if not 1 <= self.bits_per_symbol <= 10:
            raise ValueError(
                f"bits_per_symbol must be in [1, 10], got {self.bits_per_symbol}"
            )
        if self.labeling not in _LABELINGS:
            raise ValueError(f"unknown labeling {self.labeling!r}")
        points = np.asarray(self.points, dtype=np.complex128)
        if points.shape != (2**self.bits_per_symbol,):
            raise ValueError(
                f"expected {2**self.bits_per_symbol} points, got shape {points.shape}"
            )
        if not np.all(np.isfinite(points.view(np.float64))):
            raise ValueError("constellation points must be finite")
        points = points.copy()
        points.flags.writeable = False
        object.__setattr__(self, "points", points)
        if min_pairwise_distance(points) <= 0.0:
            raise DegenerateAlphabetError("constellation has coincident points")

    @property
    def size(self):
        return self.points.size

    def average_power(self):
        """Mean of |x|^2 over the alphabet."""
        return float(np.mean(np.abs(self.points) ** 2))

    def min_distance(self):
        """Smallest pairwise Euclidean distance between points."""
        return min_pairwise_distance(self.points)

    def bit_masks(self):
        """Boolean subset masks, shape (M, 2, N).

        ``masks[m, b, l]`` is True when bit ``m`` of label ``l`` equals ``b``.
        """
        m_count = self.bits_per_symbol
        labels = np.arange(self.points.size)
        masks = np.empty((m_count, 2, self.points.size), dtype=bool)
        for m in range(m_count):
            bits = label_bit(labels, m, m_count)
            masks[m, 0] = bits == 0
            masks[m, 1] = bits == 1
        return masks


def min_pairwise_distance(points):
    """Smallest pairwise distance of a complex point array."""
    points = np.asarray(points, dtype=np.complex128)
    if points.size < 2:
        return np.inf
    diff = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())


def normalize_power(alphabet):
    """Scale an alphabet to unit average power.

    Args:
        alphabet: A :class:`Constellation` or a complex array of points.

    Returns:
        The same kind of object, scaled so the mean of |x|^2 is exactly 1.
        Input that is already normalized within 1e-13 is returned unchanged,
        which makes the operation idempotent.

    Raises:
        DegenerateAlphabetError: If the alphabet has zero average power.
    """
    if isinstance(alphabet, Constellation):
        scaled = normalize_power(alphabet.points)
        if scaled is alphabet.points:
            return alphabet
        return Constellation(alphabet.bits_per_symbol, scaled, alphabet.labeling)
    points = np.asarray(alphabet, dtype=np.complex128)
    power = float(np.mean(np.abs(points) ** 2))
    if power <= 0.0:
        raise DegenerateAlphabetError("cannot normalize an all-zero alphabet")
    if abs(power - 1.0) <= 1e-13:
        return points
    return points / np.sqrt(power)


def _axis_bit_positions(bits_per_symbol):
    """Label bit positions feeding the real and imaginary axes."""
    return list(range(0, bits_per_symbol, 2)), list(range(1, bits_per_symbol, 2))


def _axis_patterns(labels, positions, bits_per_symbol):
    """Pack the label bits at ``positions`` (MSB first) into integers."""
    patterns = np.zeros_like(labels)
    for pos in positions:
        patterns = (patterns << 1) | label_bit(labels, pos, bits_per_symbol)
    return patterns


def _points_from_axis_levels(levels_re, levels_im, bits_per_symbol):
    """Build the labeled grid for per-axis Gray labeling.

    Level k of an ascending K-level axis carries the Gray pattern
    ``gray_code(K - 1 - k)``, so bit 0 marks the positive half-axis and
    neighbouring levels differ in exactly one bit.
    """
    labels = np.arange(1 << bits_per_symbol)
    re_pos, im_pos = _axis_bit_positions(bits_per_symbol)
    g_re = _axis_patterns(labels, re_pos, bits_per_symbol)
    k_re = (len(levels_re) - 1) - gray_decode(g_re)
    re = np.asarray(levels_re, dtype=float)[k_re]
    if im_pos:
        g_im = _axis_patterns(labels, im_pos, bits_per_symbol)
        k_im = (len(levels_im) - 1) - gray_decode(g_im)
        im = np.asarray(levels_im, dtype=float)[k_im]
    else:
        im = np.zeros_like(re)
    return re + 1j * im


def uniform_qam(bits_per_symbol):
    """Unit-power uniform (equally spaced) Gray-labeled square QAM.

    Args:
        bits_per_symbol: M in [1, 10].  Even M gives square ``2**M``-QAM;
            M = 1 gives BPSK on the real axis.  Odd M above 1 is rejected.

    Returns:
        A normalized ``gray_square`` :class:`Constellation`.
    """
    if not 1 <= bits_per_symbol <= 10:
        raise ValueError(f"bits_per_symbol must be in [1, 10], got {bits_per_symbol}")
    if bits_per_symbol == 1:
        levels = np.array([-1.0, 1.0])
    elif bits_per_symbol % 2:
        raise ValueError(
            f"square QAM needs an even number of bits, got {bits_per_symbol}"
        )
    else:
        half = 1 << (bits_per_symbol // 2 - 1)
        levels = np.arange(-(2 * half - 1), 2 * half, 2, dtype=float)
    points = _points_from_axis_levels(levels, levels, bits_per_symbol)
    return Constellation(bits_per_symbol, normalize_power(points), "gray_square")


@dataclass(frozen=True, eq=False)
class ShapeParams:
    """Free parameters of a shaped alphabet, before power normalization.

    Attributes:
        kind: ``"uniform"`` (no parameters), ``"nuqam_1d"`` (the sqrt(N)/2
            positive axis levels of a symmetric per-axis grid, strictly
            increasing) or ``"nuqam_2d"`` (the N/4 first-quadrant points as
            interleaved re/im pairs, all components non-negative).
        values: Real parameter vector; empty for ``"uniform"``.
    """

    kind: str
    values: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if self.kind not in ("uniform", "nuqam_1d", "nuqam_2d"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 1:
            raise ValueError("shape parameters must be a 1-D real vector")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def dof(kind, size):
    """Number of free shape parameters once the power scale is removed.

    Args:
        kind: ``"uniform"``, ``"nuqam_1d"`` or ``"nuqam_2d"``.
        size: Alphabet size N; must be a power of 4 for the shaped kinds.

    Returns:
        0 for uniform, sqrt(N)/2 - 1 for 1-D shaping and 2*(N/4) - 1 for
        2-D shaping.
    """
    if kind == "uniform":
        return 0
    root = round(np.sqrt(size))
    if size < 4 or root * root != size or root & (root - 1):
        raise ValueError(f"alphabet size must be a power of 4, got {size}")
    if kind == "nuqam_1d":
        return root // 2 - 1
    if kind == "nuqam_2d":
        return 2 * (size // 4) - 1
    raise ValueError(f"unknown shape kind {kind!r}")


def expand(params, bits_per_symbol):
    """Expand shape parameters into a normalized constellation.

    Args:
        params: A :class:`ShapeParams`.
        bits_per_symbol: Even M >= 2 for the shaped kinds (any valid M for
            ``"uniform"``).

    Returns:
        A unit-power :class:`Constellation`; ``gray_square`` for uniform and
        1-D shaping, ``gray_quadrant`` for 2-D shaping.

    Raises:
        ValueError: On an arity mismatch, non-increasing 1-D levels, or
            negative 2-D components.
        DegenerateAlphabetError: If the expanded alphabet violates the
            minimum pairwise distance floor of 1e-6.
    """
    if params.kind == "uniform":
        if params.values.size:
            raise ValueError("uniform shape takes no parameters")
        return uniform_qam(bits_per_symbol)
    if bits_per_symbol < 2 or bits_per_symbol % 2:
        raise ValueError(
            f"shaped alphabets need an even bits_per_symbol >= 2, got {bits_per_symbol}"
        )
    size = 1 << bits_per_symbol
    if params.kind == "nuqam_1d":
        half = 1 << (bits_per_symbol // 2 - 1)
        values = params.values
        if values.size != half:
            raise ValueError(
                f"nuqam_1d with {bits_per_symbol} bits takes {half} levels, "
                f"got {values.size}"
            )
        if values[0] <= 0.0 or np.any(np.diff(values) <= 0.0):
            raise ValueError("1-D levels must be positive and strictly increasing")
        levels = np.concatenate([-values[::-1], values])
        points = _points_from_axis_levels(levels, levels, bits_per_symbol)
        labeling = "gray_square"
    else:
        quarter = size // 4
        values = params.values
        if values.size != 2 * quarter:
            raise ValueError(
                f"nuqam_2d with {bits_per_symbol} bits takes {2 * quarter} reals, "
                f"got {values.size}"
            )
        if np.any(values < 0.0):
            raise ValueError("2-D first-quadrant components must be non-negative")
        first_quadrant = values[0::2] + 1j * values[1::2]
        labels = np.arange(size)
        sign_re = 1.0 - 2.0 * label_bit(labels, 0, bits_per_symbol)
        sign_im = 1.0 - 2.0 * label_bit(labels, 1, bits_per_symbol)
        base = first_quadrant[labels & (quarter - 1)]
        points = sign_re * base.real + 1j * (sign_im * base.imag)
        labeling = "gray_quadrant"
    points = normalize_power(points)
    if min_pairwise_distance(points) < _MIN_DISTANCE_FLOOR:
        raise DegenerateAlphabetError(
            "expanded alphabet violates the minimum distance floor"
        )
    return Constellation(bits_per_symbol, points, labeling)


def extract_params(constellation, kind):
    """Recover shape parameters from a structured constellation.

    The inverse of :func:`expand` up to the power normalization: feeding the
    result back through :func:`expand` reproduces the constellation.

    Args:
        constellation: A unit-power :class:`Constellation` with the
            structure required by ``kind``.
        kind: ``"uniform"``, ``"nuqam_1d"`` or ``"nuqam_2d"``.

    Returns:
        A :class:`ShapeParams` describing ``constellation``.

    Raises:
        ValueError: If the constellation does not have the symmetry or
            labeling structure the kind requires.
    """
    if kind == "uniform":
        return ShapeParams("uniform")
    bits = constellation.bits_per_symbol
    if bits < 2 or bits % 2:
        raise ValueError("shaped kinds need an even bits_per_symbol >= 2")
    points = constellation.points
    size = points.size
    if kind == "nuqam_1d":
        if constellation.labeling != "gray_square":
            raise ValueError("nuqam_1d extraction needs gray_square labeling")
        levels_count = 1 << (bits // 2)
        re_pos, im_pos = _axis_bit_positions(bits)
        levels = np.empty(levels_count)
        for k in range(levels_count):
            pattern = int(gray_code(levels_count - 1 - k))
            label = 0
            for pos, bit_index in zip(re_pos, range(len(re_pos) - 1, -1, -1)):
                label |= ((pattern >> bit_index) & 1) << (bits - 1 - pos)
            levels[k] = points[label].real
        if np.max(np.abs(levels + levels[::-1])) > 1e-9:
            raise ValueError("axis levels are not symmetric about zero")
        expected = _points_from_axis_levels(levels, levels, bits)
        if np.max(np.abs(expected - points)) > 1e-9:
            raise ValueError("constellation is not a symmetric per-axis grid")
        return ShapeParams("nuqam_1d", levels[levels_count // 2 :])
    if kind == "nuqam_2d":
        quarter = size // 4
        first_quadrant = points[:quarter]
        if np.any(first_quadrant.real < 0.0) or np.any(first_quadrant.imag < 0.0):
            raise ValueError("low labels must sit in the closed first quadrant")
        mirrored = np.concatenate(
            [
                first_quadrant,
                np.conj(first_quadrant),
                -np.conj(first_quadrant),
                -first_quadrant,
            ]
        )
        if np.max(np.abs(mirrored - points)) > 1e-9:
            raise ValueError("quadrants are not reflections of the first quadrant")
        values = np.empty(2 * quarter)
        values[0::2] = first_quadrant.real
        values[1::2] = first_quadrant.imag
        return ShapeParams("nuqam_2d", values)
    raise ValueError(f"unknown shape kind {kind!r}")


def to_dict(constellation):
    """JSON-ready dict with points listed in label order."""
    return {
        "bits_per_symbol": constellation.bits_per_symbol,
        "labeling": constellation.labeling,
        "points": [
            {"label": int(label), "re": float(point.real), "im": float(point.imag)}
            for label, point in enumerate(constellation.points)
        ],
    }


def from_dict(payload):
    """Rebuild a :class:`Constellation` from :func:`to_dict` output."""
    bits = int(payload["bits_per_symbol"])
    entries = sorted(payload["points"], key=lambda entry: entry["label"])
    labels = [entry["label"] for entry in entries]
    if labels != list(range(1 << bits)):
        raise ValueError("constellation file must list every label exactly once")
    points = np.array([entry["re"] + 1j * entry["im"] for entry in entries])
    return Constellation(bits, points, payload.get("labeling", "gray_square"))


def save_constellation(constellation, path):
    """Write a constellation to a JSON file (full float precision)."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_dict(constellation), handle, indent=1)
        handle.write("\n")


def load_constellation(path):
    """Read a constellation written by :func:`save_constellation`."""
    with open(path, encoding="utf-8") as handle:
        return from_dict(json.load(handle))
