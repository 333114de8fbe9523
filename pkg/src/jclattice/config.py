"""Flat sectioned key-value config files for sweep runs.

Format, one assignment per line:

    # comment (also ; comment)
    mode = gaps
    [params]
    M = 6
    g_r = 5:295:10       # inclusive range start:stop:step
    mu_grid = 9600, 9650, 9700

Sections group keys; a key belongs to the section above it (keys before
any section header live in the "run" section).  Values are scalars,
comma-separated lists, or inclusive numeric ranges.  Parsing is strict:
an unknown key is an error naming the closest valid key, with the line
number, because a silently ignored typo in a physics parameter is the
most expensive failure this tool can have.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass


class ConfigError(ValueError):
    """Malformed or unknown configuration input, with file position."""


#: section -> key -> type tag ("int" | "float" | "str" | "bool" |
#: "int_list" | "float_list")
SCHEMA: dict[str, dict[str, str]] = {
    "run": {
        "mode": "str",
        "out": "str",
        "workers": "int",
        "format": "str",
        "plot": "bool",
        "seed": "int",
    },
    "params": {
        "M": "int",
        "N": "int",
        "omega_c": "float",
        "delta": "float_or_list",
        "g_l": "float_or_list",
        "g_r": "float_or_list",
    },
    "eigen": {
        "k": "int",
        "tol": "float",
        "max_iter": "int",
        "dense_threshold": "int",
        "degeneracy_eps": "float",
    },
    "gce": {
        "N_max": "int",
        "mu_grid": "float_list",
        "M_list": "int_list",
        "degree": "int",
        "mott_tol": "float",
    },
    "phase": {
        "g_sum": "float",
        "lambda_grid": "float_list",
        "fillings": "int_list",
    },
    "ratio": {
        "ratios": "float_list",
        "gap_tol": "float",
    },
}

_MODES = (
    "sector",
    "gaps",
    "gce",
    "phase-lambda",
    "phase-delta",
    "analytic",
    "critical-ratio",
)


def _err(path: str, lineno: int, msg: str) -> ConfigError:
    return ConfigError(f"{path}:{lineno}: {msg}")


def _parse_scalar(raw: str, kind: str, path: str, lineno: int):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise _err(path, lineno, f"cannot parse {raw!r} as {kind}") from None


def _parse_range(raw: str, path: str, lineno: int) -> list[float]:
    parts = raw.split(":")
    if len(parts) != 3:
        raise _err(path, lineno, f"range must be start:stop:step, got {raw!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise _err(path, lineno, f"non-numeric range {raw!r}") from None
    if step <= 0:
        raise _err(path, lineno, f"range step must be positive in {raw!r}")
    n = int(round((stop - start) / step))
    vals = [start + i * step for i in range(n + 1)]
    return [v for v in vals if v <= stop + 1e-9 * max(1.0, abs(stop))]

def _parse_value(raw: str, kind: str, path: str, lineno: int):
    raw = raw.strip()
    if kind in ("float_list", "int_list", "float_or_list"):
        if ":" in raw:
            vals = _parse_range(raw, path, lineno)
            if kind == "int_list":
                ints = tuple(int(round(v)) for v in vals)
                if any(abs(i - v) > 1e-9 for i, v in zip(ints, vals)):
                    raise _err(
                        path, lineno, f"non-integer value in range {raw!r}"
                    )
                return ints
            return tuple(vals)
        if "," in raw or kind in ("float_list", "int_list"):
            item = "int" if kind == "int_list" else "float"
            vals = tuple(
                _parse_scalar(p, item, path, lineno)
                for p in raw.split(",")
                if p.strip()
            )
            if not vals:
                raise _err(path, lineno, "empty list")
            if kind == "float_or_list" and len(vals) == 1:
                return vals[0]
            return vals
        # float_or_list with a bare scalar
        return _parse_scalar(raw, "float", path, lineno)
    return _parse_scalar(raw, kind, path, lineno)


def coerce_override(target: str, raw: str):
    """Parse one command-line override.

    ``target`` is ``section.key`` or a bare key that is unique across the
    schema; ``raw`` is the value text in the same syntax the config file
    uses (including ranges and comma lists).  Returns (section, key,
    value).
    """
    if "." in target:
        section, _, key = target.partition(".")
        if section not in SCHEMA:
            close = difflib.get_close_matches(section, SCHEMA, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"unknown section {section!r} in --set{hint}")
        if key not in SCHEMA[section]:
            close = difflib.get_close_matches(key, SCHEMA[section], n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(
                f"unknown key {key!r} in section [{section}]{hint}"
            )
    else:
        hits = [(s, target) for s, ks in SCHEMA.items() if target in ks]
        if not hits:
            pool = [f"{s}.{k}" for s, ks in SCHEMA.items() for k in ks]
            close = difflib.get_close_matches(target, pool, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigError(f"unknown key {target!r} in --set{hint}")
        if len(hits) > 1:
            options = ", ".join(f"{s}.{k}" for s, k in hits)
            raise ConfigError(
                f"ambiguous key {target!r}; qualify as one of {options}"
            )
        section, key = hits[0]
    value = _parse_value(raw, SCHEMA[section][key], "<set>", 0)
    if key == "mode" and value not in _MODES:
        raise ConfigError(
            f"unknown mode {value!r}; valid: {', '.join(_MODES)}"
        )
    return section, key, value


@dataclass(frozen=True)
class RawConfig:
    """Parsed file: {section: {key: value}} plus the source path."""

    path: str
    sections: dict


def parse_file(path: str) -> RawConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, path=path)


def parse_text(text: str, path: str = "<config>") -> RawConfig:
    sections: dict = {}
    current = "run"
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        # strip trailing comment (not inside values, which never contain #)
        for marker in ("#", ";"):
            idx = stripped.find(marker)
            if idx >= 0:
                stripped = stripped[:idx].rstrip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise _err(path, lineno, f"unterminated section {stripped!r}")
            name = stripped[1:-1].strip()
            if name not in SCHEMA:
                close = difflib.get_close_matches(name, SCHEMA, n=1)
                hint = f"; did you mean [{close[0]}]?" if close else ""
                raise _err(path, lineno, f"unknown section [{name}]{hint}")
            current = name
            continue
        if "=" not in stripped:
            raise _err(path, lineno, f"expected key = value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        schema = SCHEMA[current]
        if key not in schema:
            pool = [f"{s}.{k}" for s, ks in SCHEMA.items() for k in ks]
            close = difflib.get_close_matches(
                f"{current}.{key}", pool, n=1
            ) or difflib.get_close_matches(key, schema, n=1)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise _err(
                path, lineno, f"unknown key {key!r} in [{current}]{hint}"
            )
        value = _parse_value(raw, schema[key], path, lineno)
        if key == "mode" and value not in _MODES:
            raise _err(
                path,
                lineno,
                f"unknown mode {value!r}; valid: {', '.join(_MODES)}",
            )
        sections.setdefault(current, {})[key] = value
    return RawConfig(path=path, sections=sections)
