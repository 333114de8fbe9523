"""Sector-restricted Hamiltonian of the Jaynes-Cummings ring.

In the fixed-N basis the Hamiltonian is real and extremely sparse: a
diagonal energy per configuration plus at most 2M rotating-wave couplings
per row, each moving one photon into or out of a qubit.  Qubit i exchanges
excitations with resonator i (strength g_r) and with resonator i-1,
periodic, (strength g_l).

Entries are assembled vectorized over basis rows using the packed-key
arithmetic of the basis module: a coupling is a fixed integer delta on the
key, and the target ordinal is a binary search away.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis, SectorError
from .model import LatticeParams, validate


@dataclass(frozen=True)
class SparseOperator:
    """Real symmetric operator in row-compressed form.

    Wraps a canonical scipy CSR matrix (sorted column indices, duplicates
    summed) so matrix-vector products accumulate in a fixed intra-row order
    and are bit-reproducible.
    """

    csr: sp.csr_array
    symmetric: bool = True

    @property
    def dim_rows(self) -> int:
        return self.csr.shape[0]

    @property
    def dim_cols(self) -> int:
        return self.csr.shape[1]

    @property
    def row_offsets(self) -> np.ndarray:
        return self.csr.indptr

    @property
    def col_indices(self) -> np.ndarray:
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        return self.csr.data

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape[0] != self.dim_cols:
            raise ValueError(
                f"vector length {v.shape[0]} != operator dim {self.dim_cols}"
            )
        return self.csr @ v

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()


@dataclass(frozen=True)
class MatrixFreeHamiltonian:
    """Same apply contract as SparseOperator, but nothing stored beyond the
    basis and the diagonal: coupling targets are recomputed by key
    arithmetic on every product.

    Trades time for memory; meant for sectors near the dimension cap where
    an explicit matrix would not fit.
    """

    params: LatticeParams
    basis: SectorBasis
    diag: np.ndarray
    symmetric: bool = True

    @property
    def dim_rows(self) -> int:
        return self.basis.dim

    @property
    def dim_cols(self) -> int:
        return self.basis.dim

    def diagonal(self) -> np.ndarray:
        return self.diag

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape[0] != self.basis.dim:
            raise ValueError(
                f"vector length {v.shape[0]} != operator dim {self.basis.dim}"
            )
        y = self.diag * v
        for src, tgt, val in _iter_couplings(self.params, self.basis):
            # one direction stored implicitly; do both sides of the symmetry
            y[tgt] += val * v[src]
            y[src] += val * v[tgt]
        return y

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.diag.astype(np.float64))
        for src, tgt, val in _iter_couplings(self.params, self.basis):
            out[tgt, src] += val
            out[src, tgt] += val
        return out


def _iter_couplings(
    params: LatticeParams, basis: SectorBasis
) -> Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (source rows, target rows, values) per coupling channel.

    Within one channel the source rows are distinct and so are the targets
    (the key shift is injective), which makes fancy-indexed accumulation
    safe on both sides.
    """
    occ, flg = basis.occupations, basis.flags
    M = basis.M
    w = basis.field_width
    if basis.keys is None:
        raise SectorError(
            "matrix-free couplings need the packed-key basis form"
        )
    for i in range(M):
        off_i = w * (M - 1 - i)
        # right coupling: qubit i absorbs a photon from resonator i
        if params.g_r != 0.0:
            src = np.nonzero((flg[:, i] == 0) & (occ[:, i] > 0))[0]
            if src.size:
                tgt_keys = basis.keys[src] - (np.int64(1) << off_i)
                tgt = np.searchsorted(basis.keys, tgt_keys)
                assert np.array_equal(basis.keys[tgt], tgt_keys)
                val = params.g_r * np.sqrt(occ[src, i].astype(np.float64))
                yield src, tgt, val
        # left coupling: qubit i absorbs a photon from resonator i-1
        if params.g_l != 0.0:
            j = (i - 1) % M
            off_j = w * (M - 1 - j)
            src = np.nonzero((flg[:, i] == 0) & (occ[:, j] > 0))[0]
            if src.size:
                tgt_keys = (
                    basis.keys[src]
                    - (np.int64(2) << off_j)
                    + (np.int64(1) << off_i)
                )
                tgt = np.searchsorted(basis.keys, tgt_keys)
                assert np.array_equal(basis.keys[tgt], tgt_keys)
                val = params.g_l * np.sqrt(occ[src, j].astype(np.float64))
                yield src, tgt, val


def _diagonal(params: LatticeParams, basis: SectorBasis) -> np.ndarray:
    n_tot = basis.occupations.sum(axis=1, dtype=np.int64)
    s_tot = basis.flags.sum(axis=1, dtype=np.int64)
    return params.omega_c * n_tot + 0.5 * params.omega_z * (
        2 * s_tot - basis.M
    )


def build_hamiltonian(
    params: LatticeParams,
    basis: SectorBasis,
    *,
    matrix_free: bool = False,
) -> SparseOperator | MatrixFreeHamiltonian:
    """Assemble H restricted to the sector spanned by `basis`.

    Both coupling directions are emitted explicitly, so the stored pattern
    is exactly symmetric.  Duplicate entries (they arise only for M = 1,
    where both couplings act on the same resonator) are summed.
    """
    validate(params)
    if basis.M != params.M:
        raise SectorError(
            f"basis built for M={basis.M}, params have M={params.M}"
        )
    diag = _diagonal(params, basis)
    if matrix_free:
        return MatrixFreeHamiltonian(params=params, basis=basis, diag=diag)

    dim = basis.dim
    if basis.keys is not None:
        rows = [np.arange(dim, dtype=np.int64)]
        cols = [np.arange(dim, dtype=np.int64)]
        vals = [diag]
        for src, tgt, val in _iter_couplings(params, basis):
            rows.extend((src, tgt))
            cols.extend((tgt, src))
            vals.extend((val, val))
        coo = sp.coo_array(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
    else:
        coo = _build_coo_slow(params, basis, diag)
    csr = coo.tocsr()
    csr.sum_duplicates()
    csr.sort_indices()
    return SparseOperator(csr=csr, symmetric=True)


def _build_coo_slow(
    params: LatticeParams, basis: SectorBasis, diag: np.ndarray
) -> sp.coo_array:
    """Row-at-a-time fallback for bases without the packed-key form."""
    occ, flg = basis.occupations, basis.flags
    M = basis.M
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for r in range(basis.dim):
        for i in range(M):
            if flg[r, i] != 0:
                continue
            for g, j in ((params.g_r, i), (params.g_l, (i - 1) % M)):
                if g == 0.0 or occ[r, j] == 0:
                    continue
                o2 = occ[r : r + 1].copy()
                f2 = flg[r : r + 1].copy()
                o2[0, j] -= 1
                f2[0, i] = 1
                t = int(basis.lookup_rows(o2, f2)[0])
                v = g * float(np.sqrt(float(occ[r, j])))
                rows.extend((r, t))
                cols.extend((t, r))
                vals.extend((v, v))
    rows.extend(range(basis.dim))
    cols.extend(range(basis.dim))
    vals.extend(diag.tolist())
    return sp.coo_array(
        (np.array(vals), (np.array(rows), np.array(cols))),
        shape=(basis.dim, basis.dim),
    )


def apply(op, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product through the operator's own apply."""
    return op.apply(v)


def dump_coo(op: SparseOperator, stream: IO[str]) -> None:
    """Write the stored entries as 'row col value' lines (debug aid)."""
    coo = op.csr.tocoo()
    for r, c, v in zip(coo.row, coo.col, coo.data):
        stream.write(f"{r} {c} {v:.17g}\n")


@dataclass(frozen=True)
class LadderMap:
    """Photon annihilation a_i: sector (M, N) -> sector (M, N-1).

    For source ordinal r, target_index[r] is the ordinal of the lowered
    configuration and amplitude[r] = sqrt(n_i); rows with n_i = 0 carry
    target -1 and amplitude 0.
    """

    site: int
    M: int
    N_source: int
    N_target: int
    target_index: np.ndarray  # (dim_source,) int64, -1 where annihilated
    amplitude: np.ndarray     # (dim_source,) float64

    def apply(self, v: np.ndarray, dim_target: int) -> np.ndarray:
        out = np.zeros(dim_target, dtype=np.float64)
        live = self.target_index >= 0
        # injective map: each source row lands on its own target row
        out[self.target_index[live]] = self.amplitude[live] * v[live]
        return out


def build_ladder(
    params: LatticeParams,
    i: int,
    basisN: SectorBasis,
    basisNm1: SectorBasis,
) -> LadderMap:
    """Encode a_i between two adjacent sectors of the same lattice."""
    if basisN.M != params.M or basisNm1.M != params.M:
        raise SectorError("ladder sectors must share the lattice size M")
    if basisNm1.N != basisN.N - 1:
        raise SectorError(
            f"target sector N={basisNm1.N} is not source N-1={basisN.N - 1}"
        )
    if not 0 <= i < params.M:
        raise SectorError(f"site {i} outside 0..{params.M - 1}")
    occ = basisN.occupations
    live = np.nonzero(occ[:, i] > 0)[0]
    o2 = occ[live].copy()
    o2[:, i] -= 1
    tgt = np.full(basisN.dim, -1, dtype=np.int64)
    amp = np.zeros(basisN.dim, dtype=np.float64)
    if live.size:
        tgt[live] = basisNm1.lookup_rows(o2, basisN.flags[live])
        amp[live] = np.sqrt(occ[live, i].astype(np.float64))
    return LadderMap(
        site=i,
        M=params.M,
        N_source=basisN.N,
        N_target=basisNm1.N,
        target_index=tgt,
        amplitude=amp,
    )
