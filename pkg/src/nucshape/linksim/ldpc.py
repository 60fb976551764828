"""Binary LDPC codes: alist files, systematic encoding, sum-product decoding.

Parity-check matrices travel as plain-text alist files.  Encoding works for
any full-row-rank matrix: a one-time Gauss-Jordan pass over GF(2) picks r
pivot columns, the remaining k columns carry the information bits verbatim
and the pivot bits are linear functions of them.

Decoding is the exact tanh-form sum-product algorithm on log-likelihood
ratios (positive LLR means bit 0 is more likely), iterated until every
parity check is satisfied or an iteration cap is reached.  The decoder is
vectorized over a batch of codewords and drops rows from the working set as
soon as their syndrome reaches zero.
"""

from __future__ import annotations

import importlib.resources
import math

import numpy as np

_TANH_CLIP = 0.9999999999999
_LLR_CLIP = 60.0


def read_alist(path):
    """Read a parity-check matrix from an alist file.

    Returns a dense uint8 array of shape (rows, cols).  Zero padding inside
    the index lists (used by some writers) is ignored.
    """
    with open(path, encoding="utf-8") as handle:
        tokens = handle.read().split()
    cols, rows = int(tokens[0]), int(tokens[1])
    position = 4  # skip the max-degree pair
    col_weights = [int(tokens[position + i]) for i in range(cols)]
    position += cols + rows
    matrix = np.zeros((rows, cols), dtype=np.uint8)
    for col in range(cols):
        for _ in range(col_weights[col]):
            index = int(tokens[position])
            position += 1
            if index > 0:
                matrix[index - 1, col] = 1
        # columns may be zero-padded up to the maximum column weight
        while position < len(tokens) and tokens[position] == "0":
            position += 1
    return matrix


def write_alist(matrix, path):
    """Write a dense 0/1 parity-check matrix as an alist file."""
    matrix = np.asarray(matrix, dtype=np.uint8)
    rows, cols = matrix.shape
    col_weights = matrix.sum(axis=0)
    row_weights = matrix.sum(axis=1)
    max_col = int(col_weights.max())
    max_row = int(row_weights.max())
    lines = [f"{cols} {rows}", f"{max_col} {max_row}",
             " ".join(str(int(w)) for w in col_weights),
             " ".join(str(int(w)) for w in row_weights)]
    for col in range(cols):
        entries = [str(int(row + 1)) for row in np.flatnonzero(matrix[:, col])]
        entries += ["0"] * (max_col - len(entries))
        lines.append(" ".join(entries))
    for row in range(rows):
        entries = [str(int(col + 1)) for col in np.flatnonzero(matrix[row])]
        entries += ["0"] * (max_row - len(entries))
        lines.append(" ".join(entries))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _gf2_row_reduce(matrix):
    """Gauss-Jordan elimination over GF(2).

    Returns the reduced matrix and the list of pivot columns.  Raises if the
    matrix does not have full row rank.
    """
    reduced = np.array(matrix, dtype=np.uint8) & 1
    rows, cols = reduced.shape
    pivots = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        hits = np.flatnonzero(reduced[row:, col]) + row
        if hits.size == 0:
            continue
        if hits[0] != row:
            reduced[[row, hits[0]]] = reduced[[hits[0], row]]
        eliminate = np.flatnonzero(reduced[:, col])
        eliminate = eliminate[eliminate != row]
        reduced[eliminate] ^= reduced[row]
        pivots.append(col)
        row += 1
    if row != rows:
        raise ValueError(
            f"parity-check matrix is rank deficient ({row} of {rows} rows)"
        )
    return reduced, pivots


class LdpcCode:
    """A binary LDPC code defined by a full-row-rank parity-check matrix.

    Attributes:
        n: Codeword length (columns).
        k: Information length ``n - rows``.
        rate: ``k / n``.
        info_positions: Codeword positions that carry the information bits
            verbatim (systematic encoding).
        max_iterations: Default belief-propagation iteration cap.
    """

    def __init__(self, parity_check, max_iterations=50):
        matrix = np.asarray(parity_check, dtype=np.uint8)
        if matrix.ndim != 2 or not np.isin(matrix, (0, 1)).all():
            raise ValueError("parity-check matrix must be a 2-D 0/1 array")
        rows, cols = matrix.shape
        if rows >= cols:
            raise ValueError("parity-check matrix must have fewer rows than columns")
        self.parity_check = matrix
        self.n = cols
        self.k = cols - rows
        self.rate = self.k / self.n
        self.max_iterations = int(max_iterations)
        reduced, pivots = _gf2_row_reduce(matrix)
        self._pivot_positions = np.array(pivots)
        free = np.setdiff1d(np.arange(cols), self._pivot_positions)
        self.info_positions = free
        self._parity_map = reduced[:, free]  # parity bits = map @ info (mod 2)
        self._build_graph()

    @classmethod
    def from_alist(cls, path, max_iterations=50):
        return cls(read_alist(path), max_iterations=max_iterations)

    def _build_graph(self):
        rows, cols = np.nonzero(self.parity_check)
        order = np.lexsort((cols, rows))  # edges grouped by check
        self._edge_var = cols[order]
        check_degrees = self.parity_check.sum(axis=1).astype(int)
        self._check_starts = np.concatenate([[0], np.cumsum(check_degrees)[:-1]])
        self._check_repeats = check_degrees
        var_order = np.argsort(self._edge_var, kind="stable")
        self._var_order = var_order
        var_degrees = self.parity_check.sum(axis=0).astype(int)
        self._var_starts = np.concatenate([[0], np.cumsum(var_degrees)[:-1]])
        self._var_repeats = var_degrees

    def encode(self, info_bits):
        """Systematically encode information bits.

        Args:
            info_bits: 0/1 array of shape (k,) or (batch, k).

        Returns:
            Codewords of shape (n,) or (batch, n); every parity check is
            satisfied and the information bits appear verbatim at
            ``info_positions``.
        """
        info = np.asarray(info_bits, dtype=np.uint8)
        squeeze = info.ndim == 1
        info = np.atleast_2d(info)
        if info.shape[1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {info.shape[1]}")
        parity = (info.astype(np.int32) @ self._parity_map.T.astype(np.int32)) & 1
        codewords = np.zeros((info.shape[0], self.n), dtype=np.uint8)
        codewords[:, self.info_positions] = info
        codewords[:, self._pivot_positions] = parity.astype(np.uint8)
        return codewords[0] if squeeze else codewords

    def syndrome(self, bits):
        """Parity of every check for hard bits of shape (..., n)."""
        bits = np.asarray(bits, dtype=np.uint8)
        on_edges = bits[..., self._edge_var].astype(np.int64)
        sums = np.add.reduceat(on_edges, self._check_starts, axis=-1)
        return (sums & 1).astype(np.uint8)

    def _check_update(self, v2c):
        t = np.tanh(0.5 * np.clip(v2c, -_LLR_CLIP, _LLR_CLIP))
        magnitude = np.clip(np.abs(t), 1e-300, _TANH_CLIP)
        log_mag = np.log(magnitude)
        negative = (t < 0).astype(np.int64)
        check_log = np.add.reduceat(log_mag, self._check_starts, axis=1)
        check_neg = np.add.reduceat(negative, self._check_starts, axis=1)
        log_ext = (np.repeat(check_log, self._check_repeats, axis=1) - log_mag)
        neg_ext = np.repeat(check_neg, self._check_repeats, axis=1) - negative
        sign_ext = 1.0 - 2.0 * (neg_ext & 1)
        product = np.clip(sign_ext * np.exp(log_ext), -_TANH_CLIP, _TANH_CLIP)
        return 2.0 * np.arctanh(product)

    def _variable_totals(self, llrs, c2v):
        by_var = c2v[:, self._var_order]
        sums = np.add.reduceat(by_var, self._var_starts, axis=1)
        return llrs + sums

    def decode(self, llrs, max_iterations=None):
        """Belief-propagation decode of channel LLRs.

        Args:
            llrs: Log-likelihood ratios (positive = bit 0 more likely),
                shape (n,) or (batch, n), natural-log units.
            max_iterations: Optional override of the iteration cap.

        Returns:
            ``(info_bits, converged)``: the information-bit decisions with
            the same leading shape and a per-codeword flag that is True when
            all parity checks were satisfied (early exit on zero syndrome).
        """
        cap = self.max_iterations if max_iterations is None else int(max_iterations)
        llrs = np.asarray(llrs, dtype=np.float64)
        squeeze = llrs.ndim == 1
        llrs = np.atleast_2d(llrs)
        if llrs.shape[1] != self.n:
            raise ValueError(f"expected {self.n} LLRs per codeword, got {llrs.shape[1]}")
        batch = llrs.shape[0]
        hard = (llrs < 0).astype(np.uint8)
        out_bits = hard.copy()
        converged = ~self.syndrome(hard).any(axis=1)
        active = np.flatnonzero(~converged)
        if active.size:
            base = llrs[active]
            v2c = base[:, self._edge_var]
            for _ in range(cap):
                c2v = self._check_update(v2c)
                totals = self._variable_totals(base, c2v)
                hard = (totals < 0).astype(np.uint8)
                done = ~self.syndrome(hard).any(axis=1)
                out_bits[active] = hard
                if done.any():
                    converged[active[done]] = True
                    keep = ~done
                    if not keep.any():
                        break
                    active = active[keep]
                    base = base[keep]
                    totals = totals[keep]
                    c2v = c2v[keep]
                v2c = totals[:, self._edge_var] - c2v
        info = out_bits[:, self.info_positions]
        if squeeze:
            return info[0], bool(converged[0])
        return info, converged


def shipped_code(rate, max_iterations=50):
    """Load one of the packaged short LDPC codes by rate.

    Two quasi-regular codes ship with the package: a (648, 324) rate-1/2
    code and a (720, 432) rate-3/5 code (both lengths divisible by every
    supported bits-per-symbol).

    Args:
        rate: 0.5 or 0.6 (within 1e-9), or the strings "1/2" / "3/5".

    Returns:
        The corresponding :class:`LdpcCode`.
    """
    names = {"1/2": "ldpc_n648_r12.alist", "3/5": "ldpc_n720_r35.alist"}
    if isinstance(rate, str):
        key = rate
    elif math.isclose(rate, 0.5, abs_tol=1e-9):
        key = "1/2"
    elif math.isclose(rate, 0.6, abs_tol=1e-9):
        key = "3/5"
    else:
        key = None
    if key not in names:
        raise ValueError(f"no shipped code with rate {rate!r}; available: 1/2, 3/5")
    resource = importlib.resources.files("nucshape.linksim") / "codes" / names[key]
    with importlib.resources.as_file(resource) as path:
        return LdpcCode.from_alist(path, max_iterations=max_iterations)
