"""Fixed-excitation basis for the Jaynes-Cummings ring.

The conserved charge is the total excitation number

    N = sum_i (n_i + s_i),

with n_i the photon number in resonator i and s_i in {0, 1} the qubit
flag.  A sector basis enumerates every product configuration
|n_1, s_1, ..., n_M, s_M> with that fixed N, ordered ascending
lexicographically on the flattened tuple (n_1, s_1, n_2, s_2, ...).

Each configuration is packed into a single int64 key (site 1 in the most
significant bits, per-site field (n << 1) | s), which preserves the
lexicographic order and makes membership lookups a binary search over a
sorted key array.  When M * field_width exceeds 63 bits the packed form is
abandoned for a byte-string dictionary; same contract, slower lookups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class SectorError(ValueError):
    """Raised for invalid sector requests or configurations."""


class DimensionCapError(RuntimeError):
    """Raised when a sector would exceed the configured dimension cap."""


#: Refuse to enumerate sectors larger than this unless the caller raises it.
DEFAULT_DIMENSION_CAP = 5_000_000


class SiteState(NamedTuple):
    n: int  # photon number
    s: int  # qubit excitation, 0 or 1


def sector_dimension(M: int, N: int) -> int:
    """Number of configurations with total excitation N on M cells.

    Exact integer arithmetic: choose k excited qubits, then distribute the
    remaining N - k photons freely over M resonators.
    """
    if M < 1 or N < 0:
        raise SectorError(f"need M >= 1 and N >= 0, got M={M}, N={N}")
    return sum(
        math.comb(M, k) * math.comb(N - k + M - 1, M - 1)
        for k in range(min(M, N) + 1)
    )


@dataclass(frozen=True)
class SectorBasis:
    """Materialized basis of one (M, N) sector.

    occupations[i] and flags[i] hold the photon numbers and qubit flags of
    configuration i; keys is the sorted packed-int64 form (or None when the
    packing does not fit into 63 bits).
    """

    M: int
    N: int
    occupations: np.ndarray  # (dim, M) int16
    flags: np.ndarray        # (dim, M) int8
    keys: np.ndarray | None  # (dim,) int64, strictly increasing
    field_width: int
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    def config(self, i: int) -> tuple[SiteState, ...]:
        if not 0 <= i < self.dim:
            raise SectorError(f"configuration index {i} outside [0, {self.dim})")
        occ = self.occupations[i]
        flg = self.flags[i]
        return tuple(SiteState(int(occ[j]), int(flg[j])) for j in range(self.M))

    def index_of(self, config: Sequence[tuple[int, int]]) -> int:
        if len(config) != self.M:
            raise SectorError(f"expected {self.M} sites, got {len(config)}")
        occ = np.array([[c[0] for c in config]], dtype=np.int16)
        flg = np.array([[c[1] for c in config]], dtype=np.int8)
        if np.any(occ < 0) or np.any((flg < 0) | (flg > 1)):
            raise SectorError(f"invalid configuration {config!r}")
        if int(occ.sum() + flg.sum()) != self.N:
            raise SectorError(
                f"configuration {config!r} has the wrong total excitation "
                f"for sector N={self.N}"
            )
        return int(self.lookup_rows(occ, flg)[0])

    # -- internal vectorized lookups ------------------------------------

    def pack_rows(self, occ: np.ndarray, flg: np.ndarray) -> np.ndarray:
        """Pack (r, M) occupation/flag arrays into int64 keys."""
        if self.keys is None:
            raise SectorError("sector does not fit the packed-key form")
        w = self.field_width
        shifts = (w * np.arange(self.M - 1, -1, -1, dtype=np.int64))
        fields = (occ.astype(np.int64) << 1) | flg.astype(np.int64)
        return (fields << shifts).sum(axis=1)

    def lookup_rows(self, occ: np.ndarray, flg: np.ndarray) -> np.ndarray:
        """Ordinals of the given configurations; SectorError if any is absent."""
        if self.keys is not None:
            want = self.pack_rows(occ, flg)
            pos = np.searchsorted(self.keys, want)
            bad = (pos >= self.dim) | (self.keys[np.minimum(pos, self.dim - 1)] != want)
            if np.any(bad):
                raise SectorError("configuration outside this sector")
            return pos
        table = self._byte_index()
        inter = _interleave(occ, flg)
        try:
            return np.array([table[row.tobytes()] for row in inter], dtype=np.int64)
        except KeyError as exc:
            raise SectorError("configuration outside this sector") from exc

    def _byte_index(self) -> dict:
        if not self._index:
            inter = _interleave(self.occupations, self.flags)
            self._index.update({row.tobytes(): i for i, row in enumerate(inter)})
        return self._index


def _interleave(occ: np.ndarray, flg: np.ndarray) -> np.ndarray:
    out = np.empty((occ.shape[0], 2 * occ.shape[1]), dtype=np.int16)
    out[:, 0::2] = occ
    out[:, 1::2] = flg
    return out


def enumerate_sector(
    M: int, N: int, *, cap: int = DEFAULT_DIMENSION_CAP
) -> SectorBasis:
    """Build the full (M, N) sector basis in canonical order."""
    dim = sector_dimension(M, N)
    if dim > cap:
        raise DimensionCapError(
            f"sector (M={M}, N={N}) has dimension {dim} > cap {cap}"
        )
    occ = np.zeros((dim, M), dtype=np.int16)
    flg = np.zeros((dim, M), dtype=np.int8)
    row_n = np.zeros(M, dtype=np.int16)
    row_s = np.zeros(M, dtype=np.int8)
    pos = 0

    def fill(site: int, rem: int) -> None:
        nonlocal pos
        if site == M - 1:
            # last site takes whatever is left; (rem-1, 1) precedes (rem, 0)
            if rem >= 1:
                row_n[site], row_s[site] = rem - 1, 1
                occ[pos], flg[pos] = row_n, row_s
                pos += 1
            row_n[site], row_s[site] = rem, 0
            occ[pos], flg[pos] = row_n, row_s
            pos += 1
            return
        for n in range(rem + 1):
            row_n[site] = n
            for s in range(min(1, rem - n) + 1):
                row_s[site] = s
                fill(site + 1, rem - n - s)
        row_n[site] = 0
        row_s[site] = 0

    fill(0, N)
    assert pos == dim

    width = N.bit_length() + 1
    keys: np.ndarray | None = None
    if M * width <= 63:
        shifts = width * np.arange(M - 1, -1, -1, dtype=np.int64)
        fields = (occ.astype(np.int64) << 1) | flg.astype(np.int64)
        keys = (fields << shifts).sum(axis=1)
        # canonical order doubles as the packed-key sort order
        assert np.all(np.diff(keys) > 0)
    return SectorBasis(
        M=M, N=N, occupations=occ, flags=flg, keys=keys, field_width=width
    )
