"""Ground-state observables: photon coherence, correlations, and gaps.

Everything here is computed inside one fixed-N sector.  The operator
a_i(+) a_j conserves the total excitation number, so its expectation value
is a sum over configuration pairs related by moving one photon from j to
i; the pairs are found with the same packed-key arithmetic used for the
Hamiltonian.  The N-conserving structure also makes the anomalous
quadrature parts <a_i a_j> vanish identically: bra and ket would live in
different sectors.

The ground states of interest are translation invariant on the ring, so
the photon coherence is normalized by the site-averaged photon number and
reported per lattice distance x, averaged over the ring; the deviation of
individual (i, i+x) pairs from that average is reported as an explicit
health metric rather than assumed to be zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import SectorBasis, SectorError
from .eigensolver import EigenConfig, GroundState, SolveCache
from .model import LatticeParams


class ZeroDiagonalError(ValueError):
    """Normalization impossible: the mean photon number vanishes (N = 0)."""


class ConsistencyError(RuntimeError):
    """State failed an in-sector consistency audit."""


def _check_state(state: GroundState, basis: SectorBasis) -> np.ndarray:
    v = state.vector
    if v.shape[0] != basis.dim:
        raise SectorError(
            f"state dimension {v.shape[0]} != basis dimension {basis.dim}"
        )
    return v


def photon_occupation(state: GroundState, basis: SectorBasis, i: int) -> float:
    """<a_i+ a_i> on the ground state."""
    v = _check_state(state, basis)
    return float(np.sum(basis.occupations[:, i].astype(np.float64) * v * v))


def qubit_occupation(state: GroundState, basis: SectorBasis, i: int) -> float:
    """<sigma_i+ sigma_i-> on the ground state."""
    v = _check_state(state, basis)
    return float(np.sum(basis.flags[:, i].astype(np.float64) * v * v))


def _hop_numerator(
    v: np.ndarray, basis: SectorBasis, i: int, j: int
) -> float:
    """<G| a_i+ a_j |G> for i != j, summed in source-ordinal order."""
    occ = basis.occupations
    src = np.nonzero(occ[:, j] > 0)[0]
    if src.size == 0:
        return 0.0
    if basis.keys is not None:
        w = basis.field_width
        off_i = w * (basis.M - 1 - i)
        off_j = w * (basis.M - 1 - j)
        tgt_keys = (
            basis.keys[src]
            - (np.int64(2) << off_j)
            + (np.int64(2) << off_i)
        )
        tgt = np.searchsorted(basis.keys, tgt_keys)
        assert np.array_equal(basis.keys[tgt], tgt_keys)
    else:
        o2 = occ[src].copy()
        o2[:, j] -= 1
        o2[:, i] += 1
        tgt = basis.lookup_rows(o2, basis.flags[src])
    amp = np.sqrt(
        occ[src, j].astype(np.float64) * (occ[src, i].astype(np.float64) + 1.0)
    )
    return float(np.sum(amp * v[src] * v[tgt]))


def _mean_photon(v: np.ndarray, basis: SectorBasis) -> float:
    per_site = (basis.occupations.astype(np.float64) * (v * v)[:, None]).sum(
        axis=0
    )
    return float(per_site.mean())


def rho1(state: GroundState, basis: SectorBasis, i: int, j: int) -> float:
    """Normalized photon coherence <a_i+ a_j> / <a+ a>.

    The numerator is evaluated once for the canonical (min, max) pair, so
    rho1(i, j) == rho1(j, i) exactly; the denominator is the site-averaged
    photon number (the sector ground states are translation invariant, see
    Rho1Profile.translation_residual for the actual deviation).
    """
    v = _check_state(state, basis)
    if not (0 <= i < basis.M and 0 <= j < basis.M):
        raise SectorError(f"sites ({i}, {j}) outside 0..{basis.M - 1}")
    if i == j:
        # d_i / d_i, no arithmetic needed
        if basis.N == 0:
            raise ZeroDiagonalError("no photons at N = 0")
        return 1.0
    nbar = _mean_photon(v, basis)
    if nbar == 0.0:
        raise ZeroDiagonalError("no photons at N = 0")
    a, b = (i, j) if i < j else (j, i)
    return _hop_numerator(v, basis, a, b) / nbar


@dataclass(frozen=True)
class Rho1Profile:
    """rho1 versus ring distance, averaged over the ring."""

    M: int
    N: int
    values: np.ndarray           # (floor(M/2)+1,), values[0] == 1
    diagonal: float              # site-averaged <a_i+ a_i>
    translation_residual: float  # worst per-pair deviation from the average
    degenerate: bool


def rho1_profile(state: GroundState, basis: SectorBasis) -> Rho1Profile:
    """rho1(x) for x = 0..floor(M/2) with its translation-invariance audit."""
    v = _check_state(state, basis)
    M = basis.M
    nbar = _mean_photon(v, basis)
    if nbar == 0.0:
        raise ZeroDiagonalError("no photons at N = 0")
    per_site = (basis.occupations.astype(np.float64) * (v * v)[:, None]).sum(
        axis=0
    )
    residual = float(np.max(np.abs(per_site / nbar - 1.0)))
    xmax = M // 2
    values = np.empty(xmax + 1)
    values[0] = 1.0
    for x in range(1, xmax + 1):
        ring = np.empty(M)
        for i in range(M):
            j = (i + x) % M
            a, b = (i, j) if i < j else (j, i)
            ring[i] = _hop_numerator(v, basis, a, b) / nbar
        values[x] = ring.mean()
        residual = max(residual, float(np.max(np.abs(ring - values[x]))))
    return Rho1Profile(
        M=M,
        N=basis.N,
        values=values,
        diagonal=nbar,
        translation_residual=residual,
        degenerate=state.degenerate,
    )


def qubit_correlation(
    state: GroundState, basis: SectorBasis, i: int, j: int
) -> float:
    """<sigma_i+ sigma_j- + sigma_j+ sigma_i->; 2x occupation at i == j."""
    v = _check_state(state, basis)
    if not (0 <= i < basis.M and 0 <= j < basis.M):
        raise SectorError(f"sites ({i}, {j}) outside 0..{basis.M - 1}")
    if i == j:
        return 2.0 * qubit_occupation(state, basis, i)
    a, b = (i, j) if i < j else (j, i)
    flg = basis.flags
    src = np.nonzero((flg[:, b] == 1) & (flg[:, a] == 0))[0]
    if src.size == 0:
        return 0.0
    if basis.keys is not None:
        w = basis.field_width
        off_a = w * (basis.M - 1 - a)
        off_b = w * (basis.M - 1 - b)
        tgt_keys = (
            basis.keys[src] - (np.int64(1) << off_b) + (np.int64(1) << off_a)
        )
        tgt = np.searchsorted(basis.keys, tgt_keys)
        assert np.array_equal(basis.keys[tgt], tgt_keys)
    else:
        f2 = flg[src].copy()
        f2[:, b] = 0
        f2[:, a] = 1
        tgt = basis.lookup_rows(basis.occupations[src], f2)
    one_way = float(np.sum(v[src] * v[tgt]))
    return 2.0 * one_way


def quadrature_correlation(
    state: GroundState, basis: SectorBasis, i: int, j: int
) -> float:
    """<X_i X_j> for the in-phase quadratures, fixed-N form: 2 * rho1(i, j).

    The anomalous parts <a_i a_j> and <a_i+ a_j+> connect the sector to
    N -/+ 2 and are identically zero here; the audit below re-checks that
    the state actually lives in one sector before leaning on that.
    """
    v = _check_state(state, basis)
    ntot = basis.occupations.sum(axis=1, dtype=np.int64) + basis.flags.sum(
        axis=1, dtype=np.int64
    )
    drift = float(np.sum((ntot - basis.N) * v * v))
    if abs(drift) > 1e-12:
        raise ConsistencyError(
            f"state leaks out of sector N={basis.N}: <N> - N = {drift:.3e}"
        )
    return 2.0 * rho1(state, basis, i, j)


def total_excitation(state: GroundState, basis: SectorBasis) -> float:
    """<N-hat> on the state; equals basis.N up to solver noise."""
    v = _check_state(state, basis)
    ntot = basis.occupations.sum(axis=1, dtype=np.int64) + basis.flags.sum(
        axis=1, dtype=np.int64
    )
    return float(np.sum(ntot.astype(np.float64) * v * v))


@dataclass(frozen=True)
class GapRecord:
    """Charge and excitation gaps of one (M, N) point."""

    M: int
    N: int
    E_minus: float   # E(N-1)
    E_0: float       # E(N)
    E_plus: float    # E(N+1)
    EN_plus: float   # E(N+1) - E(N)
    EN_minus: float  # E(N) - E(N-1)
    E_gp: float      # EN_plus - EN_minus
    E_x: float       # first excitation energy within sector N
    degenerate: bool


def gaps(
    params: LatticeParams,
    M: int,
    N: int,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> GapRecord:
    """Three sector solves around N, one of them two pairs deep for E_x."""
    if N < 1:
        raise SectorError(f"gaps need N >= 1, got N={N}")
    if params.M != M:
        params = replace(params, M=M)
    if cache is None:
        cache = SolveCache()
    center = cache.solve(params, N, replace(cfg, k=max(cfg.k, 2)))
    e_minus = cache.solve(params, N - 1, replace(cfg, k=1)).energy
    e_plus = cache.solve(params, N + 1, replace(cfg, k=1)).energy
    e0 = center.energy
    en_plus = e_plus - e0
    en_minus = e0 - e_minus
    return GapRecord(
        M=M,
        N=N,
        E_minus=e_minus,
        E_0=e0,
        E_plus=e_plus,
        EN_plus=en_plus,
        EN_minus=en_minus,
        E_gp=en_plus - en_minus,
        E_x=float(center.eigenvalues[1] - center.eigenvalues[0]),
        degenerate=center.degenerate,
    )
