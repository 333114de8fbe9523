"""Closed-form single-cell analytics and grand-canonical machinery.

The single qubit-resonator cell is exactly solvable: its fixed-n doublet
energies, the excitation ladder, and the curvature of that ladder (an
effective onsite repulsion) are all closed forms in (n, detuning,
coupling).  They serve two roles: physics outputs in their own right, and
exact oracles for the lattice code in the decoupled limit g_l = 0.

The grand-canonical side minimizes E(N) - mu*N per sector, which is exact
because the Hamiltonian conserves N; plateau edges of the resulting
density staircase are consecutive ground-energy differences.  Finite-size
results extrapolate to the infinite ring with a polynomial in 1/M whose
intercept is the reported thermodynamic value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .eigensolver import EigenConfig, SolveCache
from .model import LatticeParams
from .observables import rho1_profile


class ExtrapolationError(ValueError):
    """Bad extrapolation input (duplicate sizes, too few points)."""


class EstimateError(RuntimeError):
    """A scan produced no qualifying point."""


# ---------------------------------------------------------------- closed forms


def rabi_splitting(n: int, delta: float, g: float) -> float:
    """Omega_n = sqrt(delta^2 + 4 g^2 n), the dressed-doublet splitting."""
    return math.sqrt(delta * delta + 4.0 * g * g * n)


def jc_spectrum(
    n: int, delta: float, g: float, omega_c: float = 10_000.0
) -> tuple[float, float]:
    """Doublet energies (eps_minus, eps_plus) of the single cell at fixed n.

    eps_{n,+-} = (n - 1/2) omega_c +- Omega_n / 2.  The n = 0 sector is one
    state, the empty cell; both tuple entries then carry its energy
    -omega_z/2 = -(omega_c - delta)/2.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        vac = -0.5 * (omega_c - delta)
        return (vac, vac)
    mid = (n - 0.5) * omega_c
    half = 0.5 * rabi_splitting(n, delta, g)
    return (mid - half, mid + half)


def delta_eps(n: int, delta: float, g: float, omega_c: float) -> float:
    """Energy to put n excitations into one empty cell (lower branch).

    delta_eps_n = n*omega_c - delta/2 - Omega_n/2 for n >= 1; zero for the
    empty cell.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 0.0
    return n * omega_c - 0.5 * delta - 0.5 * rabi_splitting(n, delta, g)


def effective_U(n: int, delta: float, g: float) -> float:
    """Onsite repulsion read off the curvature of the cell's ladder.

    U(n) = [delta - Omega_{n+1} + Omega_n + Omega_1] / (2n); at n = 1 and
    delta = 0 this is (2 - sqrt(2)) g.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return (
        delta
        - rabi_splitting(n + 1, delta, g)
        + rabi_splitting(n, delta, g)
        + rabi_splitting(1, delta, g)
    ) / (2.0 * n)


def dressed_coefficients(n: int, delta: float, g: float) -> tuple[float, float]:
    """(alpha_n, beta_n) of |n,-> = alpha_n |n-1,up> + beta_n |n,down>.

    Gauge: beta_n > 0.  Requires g > 0 and n >= 1 so the doublet exists.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not g > 0.0:
        raise ValueError(f"dressed states need g > 0, got {g}")
    om = rabi_splitting(n, delta, g)
    denom = math.sqrt((delta + om) ** 2 + 4.0 * g * g * n)
    alpha = -(delta + om) / denom
    beta = 2.0 * g * math.sqrt(n) / denom
    return alpha, beta


def hopping_element(delta: float, g_r: float) -> float:
    """Amplitude <0,down| <2,-| sigma+ a |1,-> |1,->.

    The product of one photon-removal overlap on the emptying cell and one
    qubit-raising overlap on the filling cell: alpha_2 * beta_1^2.  Equals
    -1/(2 sqrt(2)) on resonance and vanishes at large |delta|.
    """
    alpha2, _ = dressed_coefficients(2, delta, g_r)
    _, beta1 = dressed_coefficients(1, delta, g_r)
    return alpha2 * beta1 * beta1


# ------------------------------------------------------------ extrapolation


def extrapolate(
    M_list: list[int] | tuple[int, ...], values, degree: int
) -> float:
    """Intercept at 1/M = 0 of a degree-`degree` polynomial fit in 1/M."""
    intercept, _ = extrapolate_flagged(M_list, values, degree)
    return intercept


def extrapolate_flagged(
    M_list, values, degree: int
) -> tuple[float, bool]:
    """Extrapolate and report stability.

    The fit is least squares (exact when point count equals degree + 1).
    `stable` is True when the data is monotone in 1/M and the intercept
    stays inside the data range; an intercept escaping the range of
    monotone inputs signals an untrustworthy fit.
    """
    Ms = [int(m) for m in M_list]
    vals = np.asarray(values, dtype=float)
    if len(set(Ms)) != len(Ms):
        raise ExtrapolationError(f"duplicate lattice sizes in {Ms}")
    if len(Ms) < degree + 1:
        raise ExtrapolationError(
            f"{len(Ms)} points cannot support degree {degree}"
        )
    if not np.all(np.isfinite(vals)):
        raise ExtrapolationError("non-finite input values")
    x = 1.0 / np.array(Ms, dtype=float)
    coeffs = np.polyfit(x, vals, degree)
    intercept = float(np.polyval(coeffs, 0.0))
    diffs = np.diff(vals[np.argsort(x)])
    monotone = bool(np.all(diffs >= 0.0) or np.all(diffs <= 0.0))
    inside = bool(vals.min() <= intercept <= vals.max())
    stable = (not monotone) or inside
    return intercept, stable


def extrapolated_charge_gap(
    base: LatticeParams,
    M_list=(4, 5, 6, 7, 8),
    degree: int = 4,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> tuple[float, dict[int, float], bool]:
    """Charge gap at commensurate filling N = M for each size, extrapolated.

    Returns (intercept, per-size gaps, stable flag).
    """
    if cache is None:
        cache = SolveCache()
    k1 = replace(cfg, k=1)
    per_M: dict[int, float] = {}
    for M in M_list:
        p = replace(base, M=M)
        e = {N: cache.solve(p, N, k1).energy for N in (M - 1, M, M + 1)}
        per_M[M] = (e[M + 1] - e[M]) - (e[M] - e[M - 1])
    intercept, stable = extrapolate_flagged(
        list(per_M), list(per_M.values()), degree
    )
    return intercept, per_M, stable


# ------------------------------------------------------------------- GCE


@dataclass(frozen=True)
class GceConfig:
    """Knobs for grand-canonical scans.

    N_max = None resolves to 2M + 2.  M_list = None picks the context
    default: (3, 4, 5, 6) for phase boundaries, (4, 5, 6, 7, 8) for gap
    extrapolation.  degree = None means point count minus one (capped at 4).
    """

    N_max: int | None = None
    mu_grid: tuple[float, ...] = ()
    M_list: tuple[int, ...] | None = None
    degree: int | None = None
    mott_tol: float = 1.0

    def __post_init__(self) -> None:
        if self.N_max is not None and self.N_max < 1:
            raise ValueError(f"N_max must be >= 1, got {self.N_max}")
        if self.mu_grid and list(self.mu_grid) != sorted(self.mu_grid):
            raise ValueError("mu_grid must be ascending")
        if self.M_list is not None and (
            list(self.M_list) != sorted(self.M_list) or len(self.M_list) < 1
        ):
            raise ValueError("M_list must be ascending and nonempty")

    def resolved_N_max(self, M: int) -> int:
        return self.N_max if self.N_max is not None else 2 * M + 2


@dataclass(frozen=True)
class GceResult:
    N: int
    free_energy: float
    tie: bool
    saturated: bool


def gce_ground(
    params: LatticeParams,
    mu: float,
    N_max: int,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> GceResult:
    """Minimize E(N) - mu*N over N in 0..N_max.

    Sector-wise minimization is exact because N is conserved.  Ties go to
    the smaller N and are flagged; an argmin at N_max is flagged saturated
    (the true minimum may lie beyond the allowed range).
    """
    if cache is None:
        cache = SolveCache()
    best_N = 0
    best_F = math.inf
    tie = False
    for N in range(N_max + 1):
        e = cache.solve(params, N, replace(cfg, k=1)).energy
        f = e - mu * N
        if f < best_F - 1e-9:
            best_F, best_N = f, N
            tie = False
        elif abs(f - best_F) <= 1e-9:
            tie = True  # smaller N already held; keep it
    return GceResult(
        N=best_N, free_energy=best_F, tie=tie, saturated=best_N == N_max
    )


@dataclass(frozen=True)
class DensityPoint:
    mu: float
    N: int
    n: float
    rho1_xmax: float
    free_energy: float
    tie: bool
    saturated: bool
    degenerate: bool


@dataclass(frozen=True)
class DensityCurve:
    params: LatticeParams
    N_max: int
    points: tuple[DensityPoint, ...]
    plateaus: dict[int, tuple[float, float]]  # filling -> (mu_minus, mu_plus)
    energies: dict[int, float]                # N -> E(N)


def density_curve(
    params: LatticeParams,
    gce_cfg: GceConfig,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> DensityCurve:
    """Density staircase n(mu) over gce_cfg.mu_grid plus plateau edges.

    Every sector energy comes from the shared cache, so the plateau edges
    and the staircase are consistent by construction.
    """
    if not gce_cfg.mu_grid:
        raise ValueError("mu_grid must be nonempty for density_curve")
    if cache is None:
        cache = SolveCache()
    M = params.M
    N_max = gce_cfg.resolved_N_max(M)
    energies = {
        N: cache.solve(params, N, replace(cfg, k=1)).energy
        for N in range(N_max + 1)
    }
    points = []
    xmax = M // 2
    last_N = -1
    for mu in gce_cfg.mu_grid:
        res = gce_ground(params, mu, N_max, cfg, cache)
        if res.N < last_N:
            raise EstimateError(
                f"N(mu) decreased from {last_N} to {res.N} at mu={mu}; "
                "sector energies are inconsistent"
            )
        last_N = res.N
        if res.N == 0:
            rho_x = 0.0
            degen = False
        else:
            # two pairs deep so near-degenerate SF sectors get flagged
            st = cache.solve(params, res.N, replace(cfg, k=max(cfg.k, 2)))
            prof = rho1_profile(st, cache.basis(M, res.N))
            rho_x = float(prof.values[xmax])
            degen = prof.degenerate
        points.append(
            DensityPoint(
                mu=mu,
                N=res.N,
                n=res.N / M,
                rho1_xmax=rho_x,
                free_energy=res.free_energy,
                tie=res.tie,
                saturated=res.saturated,
                degenerate=degen,
            )
        )
    plateaus: dict[int, tuple[float, float]] = {}
    filling = 1
    while filling * M + 1 <= N_max:
        Nc = filling * M
        plateaus[filling] = (
            energies[Nc] - energies[Nc - 1],
            energies[Nc + 1] - energies[Nc],
        )
        filling += 1
    return DensityCurve(
        params=params,
        N_max=N_max,
        points=tuple(points),
        plateaus=plateaus,
        energies=energies,
    )


def critical_mus(
    params: LatticeParams,
    M: int,
    n: int,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> tuple[float, float]:
    """Plateau edges (mu_minus, mu_plus) of the integer filling n at size M.

    mu_minus = E(nM) - E(nM-1), mu_plus = E(nM+1) - E(nM), the marginal
    costs of the last excitation into and the first one out of the
    commensurate sector.
    """
    if n < 1:
        raise ValueError(f"integer filling must be >= 1, got {n}")
    if params.M != M:
        params = replace(params, M=M)
    if cache is None:
        cache = SolveCache()
    k1 = replace(cfg, k=1)
    Nc = n * M
    e_m1 = cache.solve(params, Nc - 1, k1).energy
    e_0 = cache.solve(params, Nc, k1).energy
    e_p1 = cache.solve(params, Nc + 1, k1).energy
    return (e_0 - e_m1, e_p1 - e_0)


# ---------------------------------------------------------- phase diagrams


@dataclass(frozen=True)
class PhasePoint:
    """Lobe boundaries at one point of a control-parameter axis."""

    lam: float | None            # log(g_r/g_l) when on the lambda axis
    delta: float
    g_l: float
    g_r: float
    mu_minus: dict[int, dict[int, float]]  # filling -> size -> mu_minus
    mu_plus: dict[int, dict[int, float]]
    mu0_minus: dict[int, float]            # filling -> extrapolated
    mu0_plus: dict[int, float]
    lobe_width: dict[int, float]           # mu0_plus - mu0_minus
    mott: dict[int, bool]
    stable: dict[int, bool]


def couplings_from_lambda(g_sum: float, lam: float) -> tuple[float, float]:
    """Split g_l + g_r = g_sum by the log ratio lam = log(g_r/g_l)."""
    g_r = g_sum / (1.0 + math.exp(-lam))
    return g_sum - g_r, g_r


def _phase_point(
    base: LatticeParams,
    lam: float | None,
    M_list,
    degree: int,
    fillings,
    mott_tol: float,
    cfg: EigenConfig,
    cache: SolveCache,
) -> PhasePoint:
    mu_minus: dict[int, dict[int, float]] = {}
    mu_plus: dict[int, dict[int, float]] = {}
    mu0_minus: dict[int, float] = {}
    mu0_plus: dict[int, float] = {}
    width: dict[int, float] = {}
    mott: dict[int, bool] = {}
    stable: dict[int, bool] = {}
    for n in fillings:
        mu_minus[n] = {}
        mu_plus[n] = {}
        for M in M_list:
            lo, hi = critical_mus(replace(base, M=M), M, n, cfg, cache)
            mu_minus[n][M] = lo
            mu_plus[n][M] = hi
        lo0, s_lo = extrapolate_flagged(
            list(mu_minus[n]), list(mu_minus[n].values()), degree
        )
        hi0, s_hi = extrapolate_flagged(
            list(mu_plus[n]), list(mu_plus[n].values()), degree
        )
        mu0_minus[n] = lo0
        mu0_plus[n] = hi0
        width[n] = hi0 - lo0
        mott[n] = (hi0 - lo0) > mott_tol
        stable[n] = s_lo and s_hi
    return PhasePoint(
        lam=lam,
        delta=base.delta,
        g_l=base.g_l,
        g_r=base.g_r,
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        mu0_minus=mu0_minus,
        mu0_plus=mu0_plus,
        lobe_width=width,
        mott=mott,
        stable=stable,
    )


def phase_diagram_lambda(
    g_sum: float,
    lambda_grid,
    delta: float,
    gce_cfg: GceConfig = GceConfig(),
    *,
    omega_c: float = 10_000.0,
    fillings=(1, 2),
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> list[PhasePoint]:
    """Mott lobe boundaries along the coupling-imbalance axis.

    Each lambda point splits the fixed coupling budget, solves the plateau
    edges for every size in M_list, and extrapolates them to 1/M = 0.
    """
    if not g_sum > 0.0:
        raise ValueError(f"g_sum must be positive, got {g_sum}")
    if cache is None:
        cache = SolveCache()
    M_list = gce_cfg.M_list if gce_cfg.M_list is not None else (3, 4, 5, 6)
    degree = (
        gce_cfg.degree
        if gce_cfg.degree is not None
        else min(4, len(M_list) - 1)
    )
    out = []
    for lam in lambda_grid:
        g_l, g_r = couplings_from_lambda(g_sum, float(lam))
        base = LatticeParams(
            M=M_list[0], omega_c=omega_c, delta=delta, g_l=g_l, g_r=g_r
        )
        out.append(
            _phase_point(
                base,
                float(lam),
                M_list,
                degree,
                fillings,
                gce_cfg.mott_tol,
                cfg,
                cache,
            )
        )
    return out


def phase_diagram_delta(
    g_l: float,
    g_r: float,
    delta_grid,
    gce_cfg: GceConfig = GceConfig(),
    *,
    omega_c: float = 10_000.0,
    fillings=(1, 2),
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> list[PhasePoint]:
    """Mott lobe boundaries along the detuning axis at fixed couplings."""
    if cache is None:
        cache = SolveCache()
    M_list = gce_cfg.M_list if gce_cfg.M_list is not None else (3, 4, 5, 6)
    degree = (
        gce_cfg.degree
        if gce_cfg.degree is not None
        else min(4, len(M_list) - 1)
    )
    out = []
    for d in delta_grid:
        base = LatticeParams(
            M=M_list[0], omega_c=omega_c, delta=float(d), g_l=g_l, g_r=g_r
        )
        out.append(
            _phase_point(
                base,
                None,
                M_list,
                degree,
                fillings,
                gce_cfg.mott_tol,
                cfg,
                cache,
            )
        )
    return out


# -------------------------------------------------------- critical ratio


@dataclass(frozen=True)
class RatioEstimate:
    """Finite-size estimate of the critical coupling imbalance."""

    beta_c: float
    ratios: tuple[float, ...]
    gap0: tuple[float, ...]        # extrapolated gap per ratio
    gap_tol: float
    metadata: dict = field(compare=False)


def critical_ratio_estimate(
    g_sum: float,
    delta: float = 0.0,
    M_list=(4, 5, 6, 7, 8),
    gap_tol: float = 5.0,
    *,
    ratios=None,
    degree: int | None = None,
    omega_c: float = 10_000.0,
    cfg: EigenConfig = EigenConfig(),
    cache: SolveCache | None = None,
) -> RatioEstimate:
    """Largest coupling ratio g_r/g_l <= 1 whose extrapolated gap stays open.

    Scans the ratio grid at fixed g_l + g_r = g_sum and reports the last
    point with extrapolated charge gap above gap_tol.  This is a
    finite-size bracketing of where the insulating phase gives way, not a
    sharp critical point; the metadata says so explicitly.
    """
    if cache is None:
        cache = SolveCache()
    if ratios is None:
        ratios = tuple(round(0.05 * i, 2) for i in range(1, 21))
    if degree is None:
        degree = min(4, len(M_list) - 1)
    gap0 = []
    unstable = []
    for r in ratios:
        g_r = g_sum * r / (1.0 + r)
        g_l = g_sum - g_r
        base = LatticeParams(
            M=M_list[0], omega_c=omega_c, delta=delta, g_l=g_l, g_r=g_r
        )
        val, _, stab = extrapolated_charge_gap(base, M_list, degree, cfg, cache)
        gap0.append(val)
        if not stab:
            unstable.append(r)
    qualifying = [r for r, g in zip(ratios, gap0) if g > gap_tol]
    if not qualifying:
        raise EstimateError(
            f"no ratio in {ratios[0]}..{ratios[-1]} has extrapolated gap "
            f"above {gap_tol} MHz"
        )
    return RatioEstimate(
        beta_c=max(qualifying),
        ratios=tuple(float(r) for r in ratios),
        gap0=tuple(gap0),
        gap_tol=gap_tol,
        metadata={
            "finite_size_estimate": True,
            "caveat": (
                "finite-size extrapolation brackets the transition but "
                "cannot locate the critical ratio sharply"
            ),
            "M_list": tuple(int(m) for m in M_list),
            "degree": degree,
            "unstable_ratios": tuple(unstable),
        },
    )
