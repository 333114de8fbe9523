"""Command-line front end.

One subcommand per sweep mode.  Settings come from an optional config
file, overridden by repeatable ``--set section.key=value`` flags,
overridden again by the explicit convenience flags (``--out``,
``--workers``, ...).  Exit codes: 0 success, 2 bad configuration or
usage, 3 some grid points failed, 4 a sector exceeded the dimension cap.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .analysis import GceConfig
from .config import ConfigError, coerce_override, parse_file
from .eigensolver import EigenConfig
from .model import ParameterError
from .sweep import MODES, SpecError, SweepSpec, run

#: per-mode parameter defaults, chosen so each bare subcommand reproduces
#: a representative figure of the regime it is named after
MODE_DEFAULTS: dict[str, dict] = {
    "sector": {
        "params": {"M": 8, "N": 8, "delta": 0.0, "g_l": 150.0, "g_r": 150.0},
    },
    "gaps": {
        "params": {
            "M": 8,
            "delta": 0.0,
            "g_l": 25.0,
            "g_r": tuple(5.0 + 10.0 * i for i in range(30)),
        },
    },
    "gce": {
        "params": {"M": 6, "delta": 0.0, "g_l": 25.0, "g_r": 275.0},
        "gce": {
            "mu_grid": tuple(9600.0 + 10.0 * i for i in range(61)),
        },
    },
    "phase-lambda": {
        "params": {"delta": 0.0},
        "phase": {
            "g_sum": 300.0,
            "lambda_grid": tuple(-4.0 + 0.5 * i for i in range(17)),
        },
    },
    "phase-delta": {
        "params": {
            "g_l": 150.0,
            "g_r": 150.0,
            "delta": tuple(-1000.0 + 100.0 * i for i in range(21)),
        },
    },
    "analytic": {
        "params": {
            "delta": tuple(-1000.0 + 25.0 * i for i in range(81)),
            "g_r": (25.0, 150.0, 295.0),
        },
    },
    "critical-ratio": {
        "params": {"delta": 0.0},
        "phase": {"g_sum": 300.0},
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jclattice",
        description=(
            "exact-diagonalization sweeps for a ring of"
            " qubit-coupled resonators"
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="mode", metavar="mode")
    help_lines = {
        "sector": "diagonalize one excitation sector, report gap and coherence",
        "gaps": "charge gap across sizes with an infinite-size estimate",
        "gce": "filling staircase versus chemical potential",
        "phase-lambda": "lobe boundaries versus the coupling-imbalance axis",
        "phase-delta": "lobe boundaries versus qubit detuning",
        "analytic": "closed-form single-site scales",
        "critical-ratio": "largest coupling ratio with a surviving gap",
    }
    for mode in MODES:
        p = sub.add_parser(mode, help=help_lines[mode])
        p.add_argument("--config", metavar="FILE", help="config file to load")
        p.add_argument(
            "--set",
            metavar="KEY=VALUE",
            action="append",
            default=[],
            dest="overrides",
            help="override one setting (section.key=value); repeatable",
        )
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--workers", type=int, help="thread count")
        p.add_argument(
            "--format",
            choices=("csv", "json", "both"),
            dest="fmt",
            help="table format(s) to write",
        )
        p.add_argument(
            "--plot",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="write a plot description and rendered figure",
        )
        p.add_argument("--seed", type=int, help="eigensolver start-vector seed")
    return parser


def _merge_sections(mode: str, args) -> dict:
    sections: dict = {}
    if args.config:
        raw = parse_file(args.config)
        for name, kv in raw.sections.items():
            sections.setdefault(name, {}).update(kv)
        file_mode = sections.get("run", {}).get("mode")
        if file_mode is not None and file_mode != mode:
            raise ConfigError(
                f"{args.config}: run.mode = {file_mode!r} conflicts with"
                f" subcommand {mode!r}"
            )
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        target, _, raw_value = item.partition("=")
        section, key, value = coerce_override(target.strip(), raw_value)
        sections.setdefault(section, {})[key] = value
    return sections


def build_spec(mode: str, sections: dict, args) -> SweepSpec:
    defaults = MODE_DEFAULTS[mode]
    run_kv = dict(sections.get("run", {}))
    params = {**defaults.get("params", {}), **sections.get("params", {})}
    eigen_kv = dict(sections.get("eigen", {}))
    gce_kv = {**defaults.get("gce", {}), **sections.get("gce", {})}
    phase_kv = {**defaults.get("phase", {}), **sections.get("phase", {})}
    ratio_kv = dict(sections.get("ratio", {}))

    seed = args.seed if args.seed is not None else run_kv.get("seed")
    if seed is not None:
        eigen_kv["seed"] = seed
    eigen = EigenConfig(**eigen_kv)

    for key in ("mu_grid", "M_list"):
        if key in gce_kv and gce_kv[key] is not None:
            gce_kv[key] = tuple(gce_kv[key])
    gce = GceConfig(**gce_kv)

    out = args.out if args.out is not None else run_kv.get("out", "jclattice-out")
    workers = (
        args.workers if args.workers is not None else run_kv.get("workers", 1)
    )
    fmt = args.fmt if args.fmt is not None else run_kv.get("format", "csv")
    plot = args.plot if args.plot is not None else run_kv.get("plot", False)

    spec_kwargs = dict(
        mode=mode,
        omega_c=params.get("omega_c", 10_000.0),
        delta=params.get("delta", 0.0),
        g_l=params.get("g_l", 150.0),
        g_r=params.get("g_r", 150.0),
        eigen=eigen,
        gce=gce,
        out=out,
        workers=workers,
        fmt=fmt,
        plot=plot,
    )
    if "M" in params:
        spec_kwargs["M"] = params["M"]
    if "N" in params:
        spec_kwargs["N"] = params["N"]
    if "g_sum" in phase_kv:
        spec_kwargs["g_sum"] = phase_kv["g_sum"]
    if "lambda_grid" in phase_kv:
        spec_kwargs["lambda_grid"] = tuple(phase_kv["lambda_grid"])
    if "fillings" in phase_kv:
        spec_kwargs["fillings"] = tuple(phase_kv["fillings"])
    if "ratios" in ratio_kv:
        spec_kwargs["ratios"] = tuple(ratio_kv["ratios"])
    if "gap_tol" in ratio_kv:
        spec_kwargs["gap_tol"] = ratio_kv["gap_tol"]
    return SweepSpec(**spec_kwargs)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.mode is None:
        parser.print_help()
        return 2
    try:
        sections = _merge_sections(args.mode, args)
        spec = build_spec(args.mode, sections, args)
        result = run(spec)
    except (ConfigError, SpecError, ParameterError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for f in result.failures:
        print(f"failed point {f['point']}: {f['error']}", file=sys.stderr)
    files = result.diagnostics.get("files", [])
    for path in files:
        print(path)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
