"""Finite configurations (integer-valued measures) and their elementary operations."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._errors import UsageError
from .space import Ball, LatticeCube, as_point, cube_index


class Configuration:
    """A finite list of points in R^d; repeated points encode multiplicity.

    The point array is copied and made read-only, so configurations can be
    shared freely. Equality (``==``) compares the ordered point lists; use
    :meth:`same_multiset` to compare as measures.
    """

    __slots__ = ("_points",)

    def __init__(self, points=(), dim: int | None = None):
        arr = np.array(points, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, dim if dim is not None else (arr.shape[-1] if arr.ndim == 2 else 1))
        elif arr.ndim == 1:
            arr = arr.reshape(-1, dim if dim is not None else 1)
        elif arr.ndim != 2:
            raise UsageError(f"points must form an (n, d) array, got shape {arr.shape}")
        if dim is not None and arr.shape[1] != dim:
            raise UsageError(f"expected dimension {dim}, got {arr.shape[1]}")
        if arr.shape[1] < 1:
            raise UsageError("dimension must be at least 1")
        if not np.all(np.isfinite(arr)):
            raise UsageError("configuration points must be finite")
        arr.flags.writeable = False
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self):
        return iter(self._points)

    def __repr__(self) -> str:
        return f"Configuration(dim={self.dim}, points={self._points.tolist()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and np.array_equal(self._points, other._points) \
            and self.dim == other.dim

    def __hash__(self):
        return hash((self.dim, self._points.tobytes()))

    def __add__(self, other: "Configuration") -> "Configuration":
        """Superposition of two configurations (sum of measures)."""
        _check_dims(self, other)
        return Configuration(np.vstack([self._points, other._points]), dim=self.dim)

    def sorted(self) -> "Configuration":
        order = np.lexsort(self._points.T[::-1])
        return Configuration(self._points[order], dim=self.dim)

    def same_multiset(self, other: "Configuration") -> bool:
        return self.dim == other.dim and len(self) == len(other) and \
            np.array_equal(self.sorted().points, other.sorted().points)

    def is_simple(self) -> bool:
        """True when no point is repeated."""
        if len(self) < 2:
            return True
        pts = self.sorted().points
        return not bool(np.any(np.all(pts[1:] == pts[:-1], axis=1)))

    def allclose(self, other: "Configuration", atol: float = 1e-9) -> bool:
        return self.dim == other.dim and len(self) == len(other) and \
            np.allclose(self._points, other._points, rtol=0.0, atol=atol)


def _check_dims(a: Configuration, b: Configuration) -> None:
    if a.dim != b.dim:
        raise UsageError(f"dimension mismatch: {a.dim} vs {b.dim}")


# -- regions ---------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Closed axis-parallel box prod_i [lo_i, hi_i]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise UsageError("box needs lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, half_width: float, dim: int) -> "Box":
        """Lambda_N = [-N, N]^d."""
        return cls(np.full(dim, -float(half_width)), np.full(dim, float(half_width)))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def sides(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, self.dim)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.lo, other.lo) \
            and np.array_equal(self.hi, other.hi)

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi)))


@dataclass(frozen=True)
class Complement:
    region: object

    def contains(self, points) -> np.ndarray:
        return ~self.region.contains(points)


@dataclass(frozen=True)
class WholeSpace:
    def contains(self, points) -> np.ndarray:
        return np.ones(np.asarray(points).shape[0], dtype=bool)


@dataclass(frozen=True)
class CubeUnion:
    """Union of half-open lattice cubes Q_r."""

    indices: frozenset = field(default_factory=frozenset)

    def __init__(self, indices: Iterable[Sequence[int]]):
        object.__setattr__(self, "indices", frozenset(tuple(int(v) for v in r) for r in indices))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[0] == 0:
            return np.zeros(0, dtype=bool)
        idx = cube_index(pts)
        return np.array([tuple(r) in self.indices for r in idx.tolist()], dtype=bool)


def complement(region) -> Complement:
    if isinstance(region, Complement):
        return region.region
    return Complement(region)


# -- operations ------------------------------------------------------------


def restrict(gamma: Configuration, region) -> Configuration:
    """gamma_Lambda: the points of ``gamma`` lying in ``region``."""
    if len(gamma) == 0:
        return gamma
    return Configuration(gamma.points[region.contains(gamma.points)], dim=gamma.dim)


def count(gamma: Configuration, region=None) -> int:
    """Number of points in ``region`` counted with multiplicity (all of them if None)."""
    if region is None or len(gamma) == 0:
        return len(gamma)
    return int(np.count_nonzero(region.contains(gamma.points)))


def shift(gamma: Configuration, x) -> Configuration:
    """Translate every point by ``x``."""
    v = as_point(x)
    if v.shape[0] != gamma.dim:
        raise UsageError(f"dimension mismatch: configuration {gamma.dim}, shift {v.shape[0]}")
    return Configuration(gamma.points + v, dim=gamma.dim)


def pairing(f, gamma: Configuration) -> float:
    """<f, gamma> = sum of f over the points of gamma."""
    if len(gamma) == 0:
        return 0.0
    return float(np.sum(f(gamma.points)))


def vague_metric(gamma: Configuration, omega: Configuration, fs: Sequence) -> float:
    """Truncated series sum_i 2^-i (|<f_i, gamma> - <f_i, omega>| ∧ 1)."""
    if not fs:
        raise UsageError("vague_metric needs at least one test function")
    total = 0.0
    for i, f in enumerate(fs, start=1):
        total += 2.0**-i * min(abs(pairing(f, gamma) - pairing(f, omega)), 1.0)
    return total


def cube_counts(gamma: Configuration, N: int) -> dict[LatticeCube, int]:
    """gamma(Q_r) for every r in [-N, N]^d ∩ Z^d, zeros included."""
    d = gamma.dim
    hits = Counter(map(tuple, cube_index(gamma.points).tolist())) if len(gamma) else Counter()
    grid = np.stack(np.meshgrid(*[np.arange(-N, N + 1)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    return {LatticeCube(tuple(r)): hits.get(tuple(r), 0) for r in grid.tolist()}


def _nonzero_cube_counts(gamma: Configuration) -> Counter:
    if len(gamma) == 0:
        return Counter()
    return Counter(map(tuple, cube_index(gamma.points).tolist()))


@dataclass(frozen=True)
class TemperednessReport:
    holds: bool
    first_violation: int | None
    sums: tuple[int, ...]
    bounds: tuple[float, ...]


def temperedness_check(gamma: Configuration, n: int, N_max: int) -> TemperednessReport:
    """Check sum_{|r|_inf <= N} gamma(Q_r)^2 <= n^2 (2N+1)^d for N = 0..N_max."""
    d = gamma.dim
    counts = _nonzero_cube_counts(gamma)
    sums, bounds = [], []
    first = None
    for N in range(0, N_max + 1):
        s = sum(c * c for r, c in counts.items() if max(abs(v) for v in r) <= N)
        b = n * n * (2 * N + 1) ** d
        sums.append(s)
        bounds.append(float(b))
        if first is None and s > b:
            first = N
    return TemperednessReport(first is None, first, tuple(sums), tuple(bounds))


# -- file formats ----------------------------------------------------------


def to_json(gamma: Configuration) -> str:
    return json.dumps({"dim": gamma.dim, "points": gamma.points.tolist()})


def from_json(text: str) -> Configuration:
    try:
        obj = json.loads(text)
        return configuration_from_obj(obj)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed configuration JSON: {exc}") from exc


def configuration_from_obj(obj) -> Configuration:
    if not isinstance(obj, dict) or "dim" not in obj or "points" not in obj:
        raise UsageError('configuration JSON must be an object with "dim" and "points"')
    dim = int(obj["dim"])
    return Configuration(obj["points"], dim=dim)


def to_csv(gamma: Configuration) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for p in gamma.points.tolist():
        writer.writerow([repr(v) for v in p])
    return buf.getvalue()


def from_csv(text: str, dim: int | None = None) -> Configuration:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        pts = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise UsageError(f"malformed configuration CSV: {exc}") from exc
    if pts and len({len(r) for r in pts}) != 1:
        raise UsageError("CSV rows have inconsistent lengths")
    if not pts:
        return Configuration([], dim=dim or 1)
    return Configuration(pts, dim=dim)


def load(path, dim: int | None = None) -> Configuration:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).lower().endswith(".csv"):
        return from_csv(text, dim)
    return from_json(text)


def save(gamma: Configuration, path) -> None:
    text = to_csv(gamma) if str(path).lower().endswith(".csv") else to_json(gamma) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def lattice_window(N: int) -> Configuration:
    """The integer lattice of R restricted to [-N, N]."""
    return Configuration(np.arange(-N, N + 1, dtype=float), dim=1)
