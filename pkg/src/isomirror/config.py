"""INI-style pipeline configuration.

Example::

    [data]
    dir = well8
    window = 150, 230
    days = 150, 157, 164, 171, 188, 195, 202, 209, 216, 223

    [mirror]
    ase_d = 2
    mirror_m = 2
    isomap_k = auto

    [changepoint]
    method = both
    level = 0.05

    [output]
    dir = out
    seed = 0

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import DomainError
from .matching import INIT_POLICIES

CHANGEPOINT_METHODS = ("grid", "segmented", "both")


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


@dataclass(frozen=True)
class PipelineConfig:
    data_dir: Optional[Path] = None
    window: Optional[tuple] = None
    selected_days: Optional[tuple] = None
    component_before_select: bool = False
    ase_d: int = 2
    mirror_m: int = 2
    isomap_k: Optional[int] = None
    changepoint: str = "both"
    detector_level: float = 0.05
    n_perm: int = 999
    isomirror_csv: Optional[Path] = None
    match_init: str = "barycenter"
    match_pair: Optional[tuple] = None
    n_random: int = 100_000
    n_random_inits: int = 100
    match_max_iter: int = 30
    match_tol: float = 1e-6
    lpp_spec: Optional[Path] = None
    benchmark_seeds: int = 0
    seed: int = 0
    output_dir: Path = field(default_factory=lambda: Path("out"))

    def __post_init__(self):
        for name in ("ase_d", "mirror_m", "n_perm", "n_random", "n_random_inits", "match_max_iter"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.isomap_k is not None and self.isomap_k < 1:
            raise DomainError("isomap_k must be >= 1 or 'auto'")
        if not 0 < self.detector_level < 1:
            raise DomainError("detector level must lie in (0, 1)")
        if self.window is not None and self.window[0] > self.window[1]:
            raise DomainError(f"window {self.window} has lo > hi")
        if self.changepoint not in CHANGEPOINT_METHODS:
            raise DomainError(f"changepoint method must be one of {CHANGEPOINT_METHODS}")
        if self.match_init not in INIT_POLICIES:
            raise DomainError(f"match init must be one of {INIT_POLICIES}")
        if self.benchmark_seeds < 0:
            raise DomainError("benchmark seeds must be >= 0")

    def with_overrides(self, output_dir=None, seed=None) -> "PipelineConfig":
        changes = {}
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if seed is not None:
            changes["seed"] = int(seed)
        return replace(self, **changes)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from None
    base = path.resolve().parent

    def p(section, key):
        if cp.has_option(section, key):
            value = cp.get(section, key).strip()
            return (base / value) if value else None
        return None

    def get(section, key, conv, default):
        if not cp.has_option(section, key):
            return default
        try:
            return conv(cp.get(section, key))
        except ValueError as exc:
            raise DomainError(f"[{section}] {key}: {exc}") from None

    def k_value(text):
        text = text.strip().lower()
        return None if text in ("auto", "") else int(text)

    def window(text):
        lo, hi = _ints(text)
        return (lo, hi)

    def pair(text):
        i, j = _ints(text)
        return (i, j)

    return PipelineConfig(
        data_dir=p("data", "dir"),
        window=get("data", "window", window, None),
        selected_days=get("data", "days", lambda t: tuple(_ints(t)) or None, None),
        component_before_select=get("data", "component_before_select", _bool, False),
        ase_d=get("mirror", "ase_d", int, 2),
        mirror_m=get("mirror", "mirror_m", int, 2),
        isomap_k=get("mirror", "isomap_k", k_value, None),
        changepoint=get("changepoint", "method", str.strip, "both"),
        detector_level=get("changepoint", "level", float, 0.05),
        n_perm=get("changepoint", "n_perm", int, 999),
        isomirror_csv=p("changepoint", "isomirror"),
        match_init=get("match", "init", str.strip, "barycenter"),
        match_pair=get("match", "pair", pair, None),
        n_random=get("match", "n_random", int, 100_000),
        n_random_inits=get("match", "n_random_inits", int, 100),
        match_max_iter=get("match", "max_iter", int, 30),
        match_tol=get("match", "tol", float, 1e-6),
        lpp_spec=p("synth", "spec"),
        benchmark_seeds=get("synth", "benchmark", int, 0),
        seed=get("output", "seed", int, 0),
        output_dir=p("output", "dir") or base / "out",
    )


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")
