"""Time-series container, segments, genes and the overlap rule.

Sample indices are 1-based at every public boundary: a gene ``(f, l, c)``
covers samples ``f .. f + l - 1`` of the parent series.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

#: Standard deviation below which a segment dimension is considered constant.
EPS_VAR = 1e-12


class CsvFormatError(ValueError):
    """Raised when a CSV file cannot be ingested as a time series."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class TimeSeries:
    """Immutable ``n x d`` matrix of finite samples."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"time series must be n x d with n, d >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("time series contains NaN or infinite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __reduce__(self):
        # rebuild through __init__ so unpickled copies are validated and read-only
        return (TimeSeries, (np.asarray(self.values),))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.n

    def affine(self, scale: float, offset: float) -> "TimeSeries":
        return TimeSeries(self.values * scale + offset)


@dataclass(frozen=True)
class Segment:
    """A (possibly resampled) slice of a parent series.

    ``origin`` is ``(f, l)``: the 1-based start and source length in the
    parent. ``values`` is ``L x d`` with ``L >= l`` after upsampling.
    """

    values: np.ndarray
    origin: tuple[int, int] | None = None

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


class Gene(NamedTuple):
    f: int
    l: int
    c: float


@dataclass
class Solution:
    """An ordered list of ``k * s`` genes, stored column-wise.

    ``f`` and ``l`` are int64 arrays, ``c`` a float64 array, all of the same
    length. Use :meth:`from_genes` / :attr:`genes` to move between the
    columnar and the tuple view.
    """

    f: np.ndarray
    l: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=np.int64)
        self.l = np.asarray(self.l, dtype=np.int64)
        self.c = np.asarray(self.c, dtype=np.float64)
        if not (self.f.shape == self.l.shape == self.c.shape) or self.f.ndim != 1:
            raise ValueError("f, l and c must be 1-d arrays of equal length")

    @classmethod
    def from_genes(cls, genes: Iterable[Sequence]) -> "Solution":
        genes = [tuple(g) for g in genes]
        if not genes:
            return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        f, l, c = zip(*genes)
        return cls(np.array(f), np.array(l), np.array(c, dtype=np.float64))

    @property
    def genes(self) -> list[Gene]:
        return [Gene(int(f), int(l), float(c)) for f, l, c in zip(self.f, self.l, self.c)]

    def __len__(self) -> int:
        return self.f.shape[0]

    def __iter__(self) -> Iterator[Gene]:
        return iter(self.genes)

    def __getitem__(self, i: int) -> Gene:
        return Gene(int(self.f[i]), int(self.l[i]), float(self.c[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return (
            np.array_equal(self.f, other.f)
            and np.array_equal(self.l, other.l)
            and np.array_equal(self.c, other.c)
        )

    def copy(self) -> "Solution":
        return Solution(self.f.copy(), self.l.copy(), self.c.copy())

    def permuted(self, order: Sequence[int]) -> "Solution":
        order = np.asarray(order)
        return Solution(self.f[order], self.l[order], self.c[order])

    def check_bounds(self, n: int, l_min: int, l_max: int) -> None:
        """Raise ``ValueError`` if any gene violates its range."""
        bad = (
            (self.l < l_min)
            | (self.l > l_max)
            | (self.f < 1)
            | (self.f > n - self.l + 1)
            | (self.c < 0.0)
            | (self.c >= 1.0)
        )
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(f"gene {i} out of bounds: {self[i]} (n={n}, l in [{l_min}, {l_max}])")


def extract_segment(z: TimeSeries, f: int, l: int) -> Segment:
    """Copy samples ``f .. f + l - 1`` (1-based) of ``z``, all dimensions."""
    if l < 1 or f < 1 or f + l - 1 > z.n:
        raise IndexError(f"segment f={f}, l={l} outside series of length {z.n}")
    return Segment(z.values[f - 1 : f - 1 + l].copy(), origin=(f, l))


def resample_positions(l: int, L: int) -> tuple[np.ndarray, np.ndarray]:
    """Left sample index and interpolation weight for ``L`` points over ``l``.

    The ``j``-th target point sits at ``j * (l - 1) / (L - 1)`` in 0-based
    source coordinates; the integer product is formed first so the last
    point lands exactly on ``l - 1`` with zero weight, which keeps the
    endpoint bit-exact.
    """
    if L == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1)
    pos = (np.arange(L, dtype=np.int64) * (l - 1)) / (L - 1)
    left = np.floor(pos).astype(np.int64)
    return left, pos - left


def upsample_linear(x: Segment, L_target: int) -> Segment:
    """Linearly resample every dimension of ``x`` onto ``L_target`` points.

    Endpoints are preserved exactly. Downsampling is rejected.
    """
    L = x.length
    if L_target < L:
        raise ValueError(f"cannot upsample a segment of length {L} to {L_target}")
    if L_target == L:
        return Segment(x.values.copy(), x.origin)
    left, frac = resample_positions(L, L_target)
    v = x.values
    right = np.minimum(left + 1, L - 1)
    y0 = v[left]
    out = y0 + (v[right] - y0) * frac[:, None]
    return Segment(out, x.origin)


def znormalize_array(v: np.ndarray, axis: int = 0) -> np.ndarray:
    """Per-dimension z-normalization with population std; constant dims become 0."""
    mu = v.mean(axis=axis, keepdims=True)
    centered = v - mu
    sd = np.sqrt((centered * centered).mean(axis=axis, keepdims=True))
    degenerate = sd < EPS_VAR
    sd = np.where(degenerate, 1.0, sd)
    return np.where(degenerate, 0.0, centered / sd)


def znormalize(x: Segment) -> Segment:
    return Segment(znormalize_array(x.values, axis=0), x.origin)


def allowed_shared(tolerance: float, l_i, l_j):
    """Number of samples two segments may share under ``tolerance``."""
    # the 1e-9 guards products such as 0.29 * 100 = 28.999999999999996
    return np.floor(tolerance * np.minimum(l_i, l_j) + 1e-9).astype(np.int64)


def some_overlap(sol: Solution, tolerance: float = 0.0) -> bool:
    """True iff any two genes share more samples than ``tolerance`` allows."""
    if len(sol) < 2:
        return False
    start = sol.f
    end = sol.f + sol.l - 1
    shared = np.minimum(end[:, None], end[None, :]) - np.maximum(start[:, None], start[None, :]) + 1
    limit = allowed_shared(tolerance, sol.l[:, None], sol.l[None, :])
    clash = shared > limit
    np.fill_diagonal(clash, False)
    return bool(clash.any())


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv(path: str | Path) -> TimeSeries:
    """Load one row per time step, one column per dimension.

    A single non-numeric first row is treated as a header. Any other
    unparsable cell aborts with a :class:`CsvFormatError` naming the line.
    """
    rows: list[list[float]] = []
    width = None
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [cell.strip() for cell in row]
            if not cells or all(cell == "" for cell in cells):
                continue
            if lineno == 1 and not all(_is_number(cell) for cell in cells):
                continue
            try:
                parsed = [float(cell) for cell in cells]
            except ValueError:
                raise CsvFormatError(f"non-numeric cell in {cells!r}", lineno) from None
            if not all(math.isfinite(v) for v in parsed):
                raise CsvFormatError("non-finite value", lineno)
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise CsvFormatError(f"expected {width} columns, found {len(parsed)}", lineno)
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path} contains no samples")
    return TimeSeries(np.array(rows, dtype=np.float64))


def write_csv(path: str | Path, z: TimeSeries, header: Sequence[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in z.values:
            w.writerow([repr(float(v)) for v in row])
