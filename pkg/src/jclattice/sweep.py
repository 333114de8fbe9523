"""Sweep orchestration: grids of lattice solves to tables on disk.

A sweep spec names a mode (one per physics product: single sector,
charge-gap extrapolation, density staircase, phase boundaries, closed
forms, critical-ratio scan), the base parameters, and up to two swept
parameter axes.  Grid points are independent tasks executed by a thread
pool sharing one solve cache; rows are assembled in grid order afterward,
so the output is identical for any worker count.

Outputs per run: a pure RFC-4180 CSV table (12-significant-digit floats,
no timestamps, byte-reproducible), a JSON document {config, rows,
diagnostics}, and optionally a declarative plot description plus its
rendered PNG.
"""

from __future__ import annotations

import json
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .analysis import (
    EstimateError,
    GceConfig,
    couplings_from_lambda,
    critical_ratio_estimate,
    delta_eps,
    density_curve,
    effective_U,
    extrapolated_charge_gap,
    hopping_element,
    jc_spectrum,
    phase_diagram_delta,
    phase_diagram_lambda,
    rabi_splitting,
)
from .basis import DimensionCapError
from .eigensolver import EigenConfig, NoConvergenceError, SolveCache
from .model import LatticeParams, validate
from .observables import rho1_profile, total_excitation

MODES = (
    "sector",
    "gaps",
    "gce",
    "phase-lambda",
    "phase-delta",
    "analytic",
    "critical-ratio",
)

#: parameters that may carry a value list and become a swept axis
AXIS_PARAMS = ("delta", "g_l", "g_r")


class SpecError(ValueError):
    """Invalid sweep specification."""


@dataclass(frozen=True)
class SweepSpec:
    """Fully resolved description of one sweep run."""

    mode: str
    M: int = 8
    N: int | None = None
    omega_c: float = 10_000.0
    delta: float | tuple[float, ...] = 0.0
    g_l: float | tuple[float, ...] = 150.0
    g_r: float | tuple[float, ...] = 150.0
    eigen: EigenConfig = EigenConfig()
    gce: GceConfig = GceConfig()
    g_sum: float = 300.0
    lambda_grid: tuple[float, ...] = ()
    fillings: tuple[int, ...] = (1, 2)
    ratios: tuple[float, ...] | None = None
    gap_tol: float = 5.0
    out: str | None = None
    workers: int = 1
    fmt: str = "csv"
    plot: bool = False

    def axes(self) -> list[tuple[str, tuple[float, ...]]]:
        out = []
        for name in AXIS_PARAMS:
            v = getattr(self, name)
            if isinstance(v, tuple):
                out.append((name, v))
        return out

    def base_params(self) -> LatticeParams:
        def first(v):
            return v[0] if isinstance(v, tuple) else v

        return LatticeParams(
            M=self.M,
            omega_c=self.omega_c,
            delta=first(self.delta),
            g_l=first(self.g_l),
            g_r=first(self.g_r),
        )

    def validate_spec(self) -> "SweepSpec":
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        axes = self.axes()
        if len(axes) > 2:
            raise SpecError(
                f"at most 2 swept axes, got {[a for a, _ in axes]}"
            )
        for name, values in axes:
            if len(values) == 0:
                raise SpecError(f"axis {name} has no values")
        if self.fmt not in ("csv", "json", "both"):
            raise SpecError(f"format must be csv|json|both, got {self.fmt!r}")
        if self.workers < 1:
            raise SpecError(f"workers must be >= 1, got {self.workers}")
        if self.mode in ("sector", "gce"):
            # single-point params must validate now, not at solve time
            validate(self.base_params())
        return self


@dataclass
class SweepResult:
    """In-memory result of one run, pre-serialization."""

    header: dict
    columns: list[str]
    rows: list[dict]
    diagnostics: dict
    failures: list[dict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if any(f.get("resource_cap") for f in self.failures):
            return 4
        if self.failures:
            return 3
        return 0


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(result: SweepResult, path: str) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_fmt_cell(row.get(c)) for c in result.columns])


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(result: SweepResult, path: str) -> None:
    doc = {
        "config": _jsonable(result.header),
        "rows": [_jsonable(r) for r in result.rows],
        "diagnostics": _jsonable(
            dict(result.diagnostics, failures=result.failures)
        ),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ----------------------------------------------------------------- grids


def _grid(spec: SweepSpec) -> tuple[list[str], list[tuple]]:
    """Axis names and the row-major product of their values."""
    axes = spec.axes()
    if not axes:
        return [], [()]
    if len(axes) == 1:
        name, vals = axes[0]
        return [name], [(v,) for v in vals]
    (n1, v1), (n2, v2) = axes
    return [n1, n2], [(a, b) for a in v1 for b in v2]


def _point_params(spec: SweepSpec, names: list[str], coords: tuple) -> LatticeParams:
    p = spec.base_params()
    return replace(p, **dict(zip(names, coords)))


class _Progress:
    def __init__(self, mode: str, total: int):
        self.mode = mode
        self.total = total
        self.done = 0
        self.lock = threading.Lock()

    def tick(self) -> None:
        with self.lock:
            self.done += 1
            sys.stderr.write(f"\r{self.mode}: {self.done}/{self.total}")
            sys.stderr.flush()
            if self.done == self.total:
                sys.stderr.write("\n")


def _run_points(spec: SweepSpec, names, points, worker) -> tuple[list, list]:
    """Execute worker(coords) per grid point, preserving grid order."""
    progress = _Progress(spec.mode, len(points))
    results: list = [None] * len(points)
    failures: list[dict] = []

    def task(i: int):
        coords = points[i]
        try:
            results[i] = ("ok", worker(coords))
        except (NoConvergenceError, EstimateError, DimensionCapError) as exc:
            results[i] = ("failed", exc)
        except Exception as exc:  # pragma: no cover - defensive
            results[i] = ("failed", exc)
        finally:
            progress.tick()

    if spec.workers == 1:
        for i in range(len(points)):
            task(i)
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            list(pool.map(task, range(len(points))))

    rows = []
    for i, coords in enumerate(points):
        status, payload = results[i]
        coord_cells = dict(zip(names, coords))
        if status == "ok":
            for row in payload:
                rows.append({**coord_cells, **row})
        else:
            exc = payload
            failures.append(
                {
                    "point": dict(zip(names, coords)),
                    "error": f"{type(exc).__name__}: {exc}",
                    "resource_cap": isinstance(exc, DimensionCapError),
                }
            )
            rows.append(
                {
                    **coord_cells,
                    "status": f"failed:{type(exc).__name__}",
                }
            )
    return rows, failures


def _status(*flags: tuple[str, bool]) -> str:
    active = [name for name, on in flags if on]
    return "+".join(active) if active else "ok"


# ------------------------------------------------------------- mode bodies


def _run_sector(spec: SweepSpec, cache: SolveCache) -> tuple[list, list, dict, list]:
    names, points = _grid(spec)
    N = spec.N if spec.N is not None else spec.M
    xmax = spec.M // 2
    k = max(spec.eigen.k, 2)

    def worker(coords):
        p = validate(_point_params(spec, names, coords))
        st = cache.solve(p, N, replace(spec.eigen, k=k))
        basis = cache.basis(p.M, N)
        prof = rho1_profile(st, basis)
        row = {"M": p.M, "N": N}
        for i, e in enumerate(st.eigenvalues):
            row[f"E{i}_MHz"] = float(e)
        row["E_x_MHz"] = float(st.eigenvalues[1] - st.eigenvalues[0])
        for x in range(xmax + 1):
            row[f"rho1_x{x}"] = float(prof.values[x])
        row.update(
            n_mean=prof.diagonal,
            translation_residual=prof.translation_residual,
            total_excitation=total_excitation(st, basis),
            resid_max=float(np.max(st.residuals)),
            iterations=st.iterations,
            method=st.method,
            status=_status(
                ("degenerate", st.degenerate),
                ("self-coupled", p.M <= 2),
            ),
        )
        return [row]

    rows, failures = _run_points(spec, names, points, worker)
    cols = names + ["M", "N"]
    cols += [f"E{i}_MHz" for i in range(k)] + ["E_x_MHz"]
    cols += [f"rho1_x{x}" for x in range(xmax + 1)]
    cols += [
        "n_mean",
        "translation_residual",
        "total_excitation",
        "resid_max",
        "iterations",
        "method",
        "status",
    ]
    return rows, failures, {}, cols


def _run_gaps(spec: SweepSpec, cache: SolveCache) -> tuple[list, list, dict, list]:
    names, points = _grid(spec)
    M_list = spec.gce.M_list if spec.gce.M_list is not None else (4, 5, 6, 7, 8)
    degree = (
        spec.gce.degree if spec.gce.degree is not None else min(4, len(M_list) - 1)
    )

    def worker(coords):
        p = validate(_point_params(spec, names, coords))
        e0, per_M, stable = extrapolated_charge_gap(
            p, M_list, degree, spec.eigen, cache
        )
        row = {f"E_gp_M{M}_MHz": per_M[M] for M in M_list}
        row["E0_gp_MHz"] = e0
        row["extrapolation_stable"] = stable
        row["status"] = _status(("extrapolation-unstable", not stable))
        return [row]

    rows, failures = _run_points(spec, names, points, worker)
    cols = names + [f"E_gp_M{M}_MHz" for M in M_list]
    cols += ["E0_gp_MHz", "extrapolation_stable", "status"]
    diag = {"M_list": list(M_list), "degree": degree, "filling": 1}
    return rows, failures, diag, cols


def _run_gce(spec: SweepSpec, cache: SolveCache) -> tuple[list, list, dict, list]:
    p = validate(spec.base_params())
    if not spec.gce.mu_grid:
        raise SpecError("gce mode needs a nonempty mu_grid")
    rows: list[dict] = []
    failures: list[dict] = []
    diag: dict = {}
    try:
        curve = density_curve(p, spec.gce, spec.eigen, cache)
    except (DimensionCapError, EstimateError, NoConvergenceError) as exc:
        failures.append(
            {
                "point": {},
                "error": f"{type(exc).__name__}: {exc}",
                "resource_cap": isinstance(exc, DimensionCapError),
            }
        )
    else:
        for pt in curve.points:
            rows.append(
                {
                    "mu_MHz": pt.mu,
                    "mu_rel_MHz": pt.mu - p.omega_c,
                    "N": pt.N,
                    "n": pt.n,
                    "rho1_xmax": pt.rho1_xmax,
                    "F_MHz": pt.free_energy,
                    "tie": pt.tie,
                    "saturated": pt.saturated,
                    "degenerate": pt.degenerate,
                    "status": _status(
                        ("tie", pt.tie),
                        ("saturated", pt.saturated),
                        ("degenerate", pt.degenerate),
                    ),
                }
            )
        diag = {
            "N_max": curve.N_max,
            "plateaus_rel_MHz": {
                n: [lo - p.omega_c, hi - p.omega_c, hi - lo]
                for n, (lo, hi) in curve.plateaus.items()
            },
            "sector_energies_MHz": curve.energies,
        }
    cols = [
        "mu_MHz",
        "mu_rel_MHz",
        "N",
        "n",
        "rho1_xmax",
        "F_MHz",
        "tie",
        "saturated",
        "degenerate",
        "status",
    ]
    return rows, failures, diag, cols


def _phase_rows(spec: SweepSpec, pts, M_list, coord_cells_fn):
    rows = []
    for pt in pts:
        row = coord_cells_fn(pt)
        row["g_l_MHz"] = pt.g_l
        row["g_r_MHz"] = pt.g_r
        for n in spec.fillings:
            row[f"mu0_minus_n{n}_rel_MHz"] = pt.mu0_minus[n] - spec.omega_c
            row[f"mu0_plus_n{n}_rel_MHz"] = pt.mu0_plus[n] - spec.omega_c
            row[f"lobe_width_n{n}_MHz"] = pt.lobe_width[n]
            row[f"mott_n{n}"] = pt.mott[n]
            row[f"stable_n{n}"] = pt.stable[n]
            for M in M_list:
                row[f"mu_minus_n{n}_M{M}_rel_MHz"] = (
                    pt.mu_minus[n][M] - spec.omega_c
                )
                row[f"mu_plus_n{n}_M{M}_rel_MHz"] = (
                    pt.mu_plus[n][M] - spec.omega_c
                )
        row["status"] = _status(
            ("extrapolation-unstable", not all(pt.stable.values()))
        )
        rows.append(row)
    return rows


def _phase_cols(spec: SweepSpec, M_list, coord_names):
    cols = coord_names + ["g_l_MHz", "g_r_MHz"]
    for n in spec.fillings:
        cols += [
            f"mu0_minus_n{n}_rel_MHz",
            f"mu0_plus_n{n}_rel_MHz",
            f"lobe_width_n{n}_MHz",
            f"mott_n{n}",
            f"stable_n{n}",
        ]
        for M in M_list:
            cols += [
                f"mu_minus_n{n}_M{M}_rel_MHz",
                f"mu_plus_n{n}_M{M}_rel_MHz",
            ]
    cols.append("status")
    return cols


def _run_phase_lambda(spec: SweepSpec, cache: SolveCache):
    if not spec.lambda_grid:
        raise SpecError("phase-lambda mode needs a nonempty lambda_grid")
    M_list = spec.gce.M_list if spec.gce.M_list is not None else (3, 4, 5, 6)
    grid = spec.lambda_grid
    progress = _Progress(spec.mode, len(grid))
    rows: list[dict] = []
    failures: list[dict] = []

    def one(lam: float):
        try:
            pts = phase_diagram_lambda(
                spec.g_sum,
                [lam],
                float(spec.delta) if not isinstance(spec.delta, tuple) else spec.delta[0],
                spec.gce,
                omega_c=spec.omega_c,
                fillings=spec.fillings,
                cfg=spec.eigen,
                cache=cache,
            )
            return ("ok", pts[0])
        except (NoConvergenceError, DimensionCapError, EstimateError) as exc:
            return ("failed", exc)
        finally:
            progress.tick()

    if spec.workers == 1:
        outcomes = [one(lam) for lam in grid]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(one, grid))

    for lam, (status, payload) in zip(grid, outcomes):
        if status == "ok":
            rows.extend(
                _phase_rows(spec, [payload], M_list, lambda pt: {"lambda": pt.lam})
            )
        else:
            failures.append(
                {
                    "point": {"lambda": lam},
                    "error": f"{type(payload).__name__}: {payload}",
                    "resource_cap": isinstance(payload, DimensionCapError),
                }
            )
            rows.append(
                {"lambda": lam, "status": f"failed:{type(payload).__name__}"}
            )
    cols = _phase_cols(spec, M_list, ["lambda"])
    diag = {"M_list": list(M_list), "g_sum": spec.g_sum}
    return rows, failures, diag, cols


def _run_phase_delta(spec: SweepSpec, cache: SolveCache):
    deltas = spec.delta if isinstance(spec.delta, tuple) else (spec.delta,)
    M_list = spec.gce.M_list if spec.gce.M_list is not None else (3, 4, 5, 6)

    def g_scalar(v, name):
        if isinstance(v, tuple):
            raise SpecError(f"phase-delta cannot sweep {name}")
        return v

    g_l = g_scalar(spec.g_l, "g_l")
    g_r = g_scalar(spec.g_r, "g_r")
    progress = _Progress(spec.mode, len(deltas))
    rows: list[dict] = []
    failures: list[dict] = []

    def one(d: float):
        try:
            pts = phase_diagram_delta(
                g_l,
                g_r,
                [d],
                spec.gce,
                omega_c=spec.omega_c,
                fillings=spec.fillings,
                cfg=spec.eigen,
                cache=cache,
            )
            return ("ok", pts[0])
        except (NoConvergenceError, DimensionCapError, EstimateError) as exc:
            return ("failed", exc)
        finally:
            progress.tick()

    if spec.workers == 1:
        outcomes = [one(d) for d in deltas]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(one, deltas))

    for d, (status, payload) in zip(deltas, outcomes):
        if status == "ok":
            rows.extend(
                _phase_rows(spec, [payload], M_list, lambda pt: {"delta_MHz": pt.delta})
            )
        else:
            failures.append(
                {
                    "point": {"delta_MHz": d},
                    "error": f"{type(payload).__name__}: {payload}",
                    "resource_cap": isinstance(payload, DimensionCapError),
                }
            )
            rows.append(
                {"delta_MHz": d, "status": f"failed:{type(payload).__name__}"}
            )
    cols = _phase_cols(spec, M_list, ["delta_MHz"])
    diag = {"M_list": list(M_list)}
    return rows, failures, diag, cols


def _run_analytic(spec: SweepSpec, cache: SolveCache):
    names, points = _grid(spec)

    def worker(coords):
        p = _point_params(spec, names, coords)
        g = p.g_r
        e1m, e1p = jc_spectrum(1, p.delta, g, p.omega_c)
        row = {
            "Omega1_MHz": rabi_splitting(1, p.delta, g),
            "eps_1_minus_MHz": e1m,
            "eps_1_plus_MHz": e1p,
            "delta_eps_1_MHz": delta_eps(1, p.delta, g, p.omega_c),
            "delta_eps_2_MHz": delta_eps(2, p.delta, g, p.omega_c),
            "U_n1_MHz": effective_U(1, p.delta, g),
            "U_n2_MHz": effective_U(2, p.delta, g),
            "U_n3_MHz": effective_U(3, p.delta, g),
            "hopping_element": hopping_element(p.delta, g) if g > 0 else None,
            "status": "ok",
        }
        return [row]

    rows, failures = _run_points(spec, names, points, worker)
    cols = names + [
        "Omega1_MHz",
        "eps_1_minus_MHz",
        "eps_1_plus_MHz",
        "delta_eps_1_MHz",
        "delta_eps_2_MHz",
        "U_n1_MHz",
        "U_n2_MHz",
        "U_n3_MHz",
        "hopping_element",
        "status",
    ]
    return rows, failures, {}, cols


def _run_critical_ratio(spec: SweepSpec, cache: SolveCache):
    M_list = spec.gce.M_list if spec.gce.M_list is not None else (4, 5, 6, 7, 8)
    degree = spec.gce.degree
    rows: list[dict] = []
    failures: list[dict] = []
    diag: dict = {}
    delta = spec.delta if not isinstance(spec.delta, tuple) else spec.delta[0]
    try:
        est = critical_ratio_estimate(
            spec.g_sum,
            float(delta),
            M_list,
            spec.gap_tol,
            ratios=spec.ratios,
            degree=degree,
            omega_c=spec.omega_c,
            cfg=spec.eigen,
            cache=cache,
        )
    except (EstimateError, NoConvergenceError, DimensionCapError) as exc:
        failures.append(
            {
                "point": {},
                "error": f"{type(exc).__name__}: {exc}",
                "resource_cap": isinstance(exc, DimensionCapError),
            }
        )
    else:
        for r, g0 in zip(est.ratios, est.gap0):
            g_r = spec.g_sum * r / (1.0 + r)
            rows.append(
                {
                    "ratio": r,
                    "g_l_MHz": spec.g_sum - g_r,
                    "g_r_MHz": g_r,
                    "E0_gp_MHz": g0,
                    "qualifies": g0 > est.gap_tol,
                    "status": _status(
                        (
                            "extrapolation-unstable",
                            r in est.metadata["unstable_ratios"],
                        )
                    ),
                }
            )
        diag = {
            "beta_c": est.beta_c,
            "gap_tol_MHz": est.gap_tol,
            **est.metadata,
        }
    cols = ["ratio", "g_l_MHz", "g_r_MHz", "E0_gp_MHz", "qualifies", "status"]
    return rows, failures, diag, cols


_BODIES = {
    "sector": _run_sector,
    "gaps": _run_gaps,
    "gce": _run_gce,
    "phase-lambda": _run_phase_lambda,
    "phase-delta": _run_phase_delta,
    "analytic": _run_analytic,
    "critical-ratio": _run_critical_ratio,
}


def run(spec: SweepSpec, cache: SolveCache | None = None) -> SweepResult:
    """Execute the sweep and write the requested files."""
    spec = spec.validate_spec()
    if cache is None:
        cache = SolveCache()
    t0 = time.time()
    rows, failures, diag, cols = _BODIES[spec.mode](spec, cache)
    elapsed = time.time() - t0
    header = {
        "tool": "jclattice",
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "spec": _spec_dict(spec),
    }
    diag = dict(diag)
    diag.setdefault("elapsed_s", round(elapsed, 3))
    diag.setdefault("cached_solves", cache.size)
    result = SweepResult(
        header=header,
        columns=cols,
        rows=rows,
        diagnostics=diag,
        failures=failures,
    )
    if spec.out is not None:
        _write_outputs(spec, result)
    return result


def _spec_dict(spec: SweepSpec) -> dict:
    d = asdict(spec)
    d["eigen"] = asdict(spec.eigen)
    d["gce"] = asdict(spec.gce)
    return d


def _write_outputs(spec: SweepSpec, result: SweepResult) -> None:
    os.makedirs(spec.out, exist_ok=True)
    stem = os.path.join(spec.out, spec.mode)
    wrote = []
    if spec.fmt in ("csv", "both"):
        write_csv(result, stem + ".csv")
        wrote.append(stem + ".csv")
    if spec.fmt in ("json", "both"):
        write_json(result, stem + ".json")
        wrote.append(stem + ".json")
    if spec.plot:
        from .plotting import describe, render

        desc_path = stem + ".plot"
        desc = describe(spec, result, os.path.basename(stem + ".csv"))
        if desc is not None:
            if spec.fmt == "json":
                # the renderer reads the CSV, so make sure it exists
                write_csv(result, stem + ".csv")
                wrote.append(stem + ".csv")
            with open(desc_path, "w", encoding="utf-8") as fh:
                fh.write(desc)
            wrote.append(desc_path)
            png = render(desc_path, stem + ".png")
            wrote.append(png)
    result.diagnostics["files"] = wrote
