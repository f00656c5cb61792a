"""Experiment configuration: strict line-oriented `key = value` files with
[section] headers.

Sections: [experiment] (version, task), [channel] (q, l), [potential]
(family + parameters + r0), repeatable [kernel.N] blocks, [scan] (grids and
coupling), optional [grid], [tolerances] and [output].  Unknown sections or
keys are rejected; the version key is mandatory.  ``validate`` reports every
violation at once instead of stopping at the first.
"""

from __future__ import annotations

import configparser
import csv as _csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .model import ChannelParams
from .potentials import (KernelTerm, PotentialModel, gaussian_bump, poly_bump,
                         square_well, tabulated, truncated_exponential,
                         truncated_gaussian)

TASKS = ("eval-special", "solve", "phase-shift", "wronskian-audit",
         "bound-states", "levinson", "sturm-check")

CONFIG_VERSION = 1

_KNOWN_KEYS = {
    "experiment": {"version", "task"},
    "channel": {"q", "l"},
    "potential": {"family", "depth", "scale", "width", "r0", "table", "mu"},
    "kernel": {"family", "center", "width", "height", "a", "b", "strength"},
    "scan": {"k", "k_min", "k_max", "k_count", "e", "e_min", "e_max", "e_count",
             "mu", "mu_steps", "name", "nu", "x", "kind", "k_im", "de",
             "pair", "lambdas", "ks", "e_floor"},
    "grid": {"r_min", "r_max", "n_interior", "n_exterior"},
    "tolerances": {"ode", "eta", "root"},
    "output": {"metadata", "staircase"},
}


@dataclass
class ExperimentConfig:
    """Parsed experiment file, with raw strings kept for diagnostics."""

    task: str
    version: int
    channel: Dict[str, str] = field(default_factory=dict)
    potential: Dict[str, str] = field(default_factory=dict)
    kernels: List[Dict[str, str]] = field(default_factory=list)
    scan: Dict[str, str] = field(default_factory=dict)
    grid: Dict[str, str] = field(default_factory=dict)
    tolerances: Dict[str, str] = field(default_factory=dict)
    output: Dict[str, str] = field(default_factory=dict)
    source: str = ""


def parse_config(path_or_text) -> ExperimentConfig:
    """Parse a config file (path or raw text); raises ConfigError on malformed input."""
    if isinstance(path_or_text, (str, Path)) and "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text(encoding="utf-8")
        source = str(path_or_text)
    else:
        text = str(path_or_text)
        source = "<inline>"
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    cp.optionxform = str.lower
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    exp = dict(cp["experiment"])
    if "version" not in exp:
        raise ConfigError("missing mandatory 'version' key in [experiment]")
    try:
        version = int(exp["version"])
    except ValueError as exc:
        raise ConfigError("version must be an integer") from exc
    task = exp.get("task", "")
    kernels = []
    for name in cp.sections():
        if name.startswith("kernel."):
            kernels.append(dict(cp[name]))
    cfg = ExperimentConfig(
        task=task, version=version,
        channel=dict(cp["channel"]) if "channel" in cp else {},
        potential=dict(cp["potential"]) if "potential" in cp else {},
        kernels=kernels,
        scan=dict(cp["scan"]) if "scan" in cp else {},
        grid=dict(cp["grid"]) if "grid" in cp else {},
        tolerances=dict(cp["tolerances"]) if "tolerances" in cp else {},
        output=dict(cp["output"]) if "output" in cp else {},
        source=source,
    )
    cfg._sections = [s for s in cp.sections()]  # type: ignore[attr-defined]
    return cfg


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def validate(cfg: ExperimentConfig) -> List[str]:
    """All invariant violations at once (empty list = valid)."""
    diags: List[str] = []
    if cfg.version != CONFIG_VERSION:
        diags.append(f"unsupported config version {cfg.version} (expected {CONFIG_VERSION})")
    if cfg.task not in TASKS:
        diags.append(f"unknown task {cfg.task!r}; expected one of {', '.join(TASKS)}")
    sections = getattr(cfg, "_sections", [])
    for name in sections:
        base = "kernel" if name.startswith("kernel.") else name
        if base not in _KNOWN_KEYS:
            diags.append(f"unknown section [{name}]")
    for name, keys, store in (
        ("experiment", {"version", "task"}, {"version": "", "task": ""}),
        ("channel", _KNOWN_KEYS["channel"], cfg.channel),
        ("potential", _KNOWN_KEYS["potential"], cfg.potential),
        ("scan", _KNOWN_KEYS["scan"], cfg.scan),
        ("grid", _KNOWN_KEYS["grid"], cfg.grid),
        ("tolerances", _KNOWN_KEYS["tolerances"], cfg.tolerances),
        ("output", _KNOWN_KEYS["output"], cfg.output),
    ):
        for key in store:
            if key not in keys:
                diags.append(f"unknown key '{key}' in [{name}]")
    for i, kern in enumerate(cfg.kernels, 1):
        for key in kern:
            if key not in _KNOWN_KEYS["kernel"]:
                diags.append(f"unknown key '{key}' in [kernel.{i}]")

    q = l = None
    if cfg.task not in ("eval-special",):
        for key in ("q", "l"):
            if key not in cfg.channel:
                diags.append(f"missing '{key}' in [channel]")
            elif not _is_float(cfg.channel[key]):
                diags.append(f"[channel] {key} must be numeric")
        if not diags or all(_is_float(cfg.channel.get(k, "x")) for k in ("q", "l")):
            q = float(cfg.channel.get("q", "nan"))
            l = float(cfg.channel.get("l", "nan"))
        if "r0" not in cfg.potential:
            diags.append("missing 'r0' in [potential]")
        elif not _is_float(cfg.potential["r0"]):
            diags.append("[potential] r0 must be numeric")
        elif float(cfg.potential["r0"]) <= 0:
            diags.append("[potential] r0 must be positive")

    if q is not None and l is not None and q == q and l == l:
        lam = l + (q - 2) / 2
        if cfg.task in ("levinson", "bound-states", "sturm-check") and lam <= 0:
            diags.append(
                f"lambda = {lam} unsupported for task {cfg.task} "
                "(threshold-degenerate regime: need l + (q-2)/2 > 0)")

    r0 = None
    if _is_float(cfg.potential.get("r0", "")):
        r0 = float(cfg.potential["r0"])
    family = cfg.potential.get("family")
    if family is not None and family not in ("none", "square_well",
                                             "truncated_exponential",
                                             "truncated_gaussian", "tabulated"):
        diags.append(f"unknown potential family {family!r}")
    for i, kern in enumerate(cfg.kernels, 1):
        fam = kern.get("family")
        if fam not in ("gaussian_bump", "poly_bump"):
            diags.append(f"[kernel.{i}] unknown kernel family {fam!r}")
            continue
        if "strength" not in kern:
            diags.append(f"[kernel.{i}] missing 'strength'")
        if r0 is not None and fam == "gaussian_bump":
            try:
                term = _build_kernel(kern, r0)
                # material support beyond the cutoff, not a negligible tail
                if abs(term.profile(r0)) > 1e-3 * _bump_peak(term):
                    diags.append(
                        f"[kernel.{i}] profile support reaches the cutoff r0 = {r0}: "
                        "the kernel must vanish for r >= r0")
            except (ConfigError, ValueError, KeyError):
                diags.append(f"[kernel.{i}] malformed parameters")

    for key, val in cfg.scan.items():
        if key in ("name", "kind", "pair", "lambdas", "ks"):
            continue
        if not _is_float(val):
            diags.append(f"[scan] {key} must be numeric")
    for gk in ("k", "e"):
        lo, hi, cnt = (cfg.scan.get(f"{gk}_min"), cfg.scan.get(f"{gk}_max"),
                       cfg.scan.get(f"{gk}_count"))
        if lo is not None and hi is not None and _is_float(lo) and _is_float(hi):
            if float(lo) >= float(hi):
                diags.append(f"[scan] {gk}_min must be < {gk}_max")
            if cnt is not None and _is_float(cnt) and int(float(cnt)) < 2:
                diags.append(f"[scan] {gk}_count must be >= 2")
    return diags


def _bump_peak(term: KernelTerm) -> float:
    params = dict(term.params)
    return abs(params.get("height", 1.0))


def _build_kernel(kern: Dict[str, str], r0: float) -> KernelTerm:
    fam = kern["family"]
    if fam == "gaussian_bump":
        return gaussian_bump(center=float(kern["center"]),
                             width=float(kern["width"]),
                             height=float(kern.get("height", "1")))
    if fam == "poly_bump":
        return poly_bump(a=float(kern["a"]), b=float(kern["b"]), r0=r0,
                         height=float(kern.get("height", "1")))
    raise ConfigError(f"unknown kernel family {fam!r}")


def build_channel(cfg: ExperimentConfig) -> ChannelParams:
    return ChannelParams(q=float(cfg.channel["q"]), l=float(cfg.channel["l"]))


def build_potential(cfg: ExperimentConfig) -> PotentialModel:
    r0 = float(cfg.potential["r0"])
    family = cfg.potential.get("family", "none")
    if family == "none":
        local = None
    elif family == "square_well":
        local = square_well(float(cfg.potential["depth"]))
    elif family == "truncated_exponential":
        local = truncated_exponential(float(cfg.potential["depth"]),
                                      float(cfg.potential["scale"]))
    elif family == "truncated_gaussian":
        local = truncated_gaussian(float(cfg.potential["depth"]),
                                   float(cfg.potential["width"]))
    elif family == "tabulated":
        rows = _read_table(Path(cfg.potential["table"]))
        local = tabulated([r for r, _ in rows], [v for _, v in rows])
    else:
        raise ConfigError(f"unknown potential family {family!r}")
    kernels = tuple(_build_kernel(k, r0) for k in cfg.kernels)
    strengths = tuple(float(k["strength"]) for k in cfg.kernels)
    mu = float(cfg.potential.get("mu", "1"))
    return PotentialModel(r0=r0, local=local, kernel=kernels,
                          strengths=strengths, mu=mu)


def _read_table(path: Path) -> List[Tuple[float, float]]:
    """Two-column (r, V) CSV; a non-numeric first row is treated as a header."""
    rows: List[Tuple[float, float]] = []
    try:
        with path.open(newline="") as fh:
            for i, row in enumerate(_csv.reader(fh)):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) < 2:
                    raise ConfigError(f"{path}: row {i + 1} needs two columns")
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if i == 0:
                        continue
                    raise ConfigError(f"{path}: non-numeric row {i + 1}")
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least two data rows")
    return rows


def scan_floats(cfg: ExperimentConfig, prefix: str) -> Optional[np.ndarray]:
    """Build the grid `prefix`_min/_max/_count from [scan], or a single `prefix` value."""
    s = cfg.scan
    if f"{prefix}_min" in s:
        lo, hi = float(s[f"{prefix}_min"]), float(s[f"{prefix}_max"])
        n = int(float(s.get(f"{prefix}_count", "50")))
        return np.linspace(lo, hi, n)
    if prefix in s:
        return np.array([float(s[prefix])])
    return None
