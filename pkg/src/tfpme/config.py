"""YAML run configuration: parsing, validation and initial-data construction."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigurationError
from .spectral_domain import SPECTRA, Field, SpectralBasis, build_interval_basis
from .stepper import SolverConfig

__all__ = ["RunConfig", "load_config", "parse_config", "build_initial", "parse_number", "parse_integer"]

INITIAL_TYPES = ("eigenfunction", "gaussian", "profile_scaled", "csv")
_REQUIRED = ("alpha", "m", "length", "n_modes", "tau", "t_final", "initial")


def parse_number(raw: Any, key: str) -> float:
    if isinstance(raw, bool):
        raise ConfigurationError(f"expected a number, got {raw!r}", key=key)
    if isinstance(raw, str):
        text = raw.strip().lower()
        # YAML 1.1 reads "1e-2" as a string; also allow multiples of pi
        if text in ("pi", "π"):
            return math.pi
        if text.endswith("pi") or text.endswith("*pi"):
            head = text[:-2].rstrip("*").strip()
            return parse_number(head, key) * math.pi
        try:
            return float(text)
        except ValueError:
            raise ConfigurationError(f"expected a number, got {raw!r}", key=key) from None
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a number, got {raw!r}", key=key) from None
    if not math.isfinite(val):
        raise ConfigurationError(f"must be finite, got {raw!r}", key=key)
    return val


def parse_integer(raw: Any, key: str) -> int:
    val = parse_number(raw, key)
    if val != int(val):
        raise ConfigurationError(f"expected an integer, got {raw!r}", key=key)
    return int(val)


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    m: float
    length: float
    n_modes: int
    n_grid: int
    tau: float
    t_final: float
    initial: dict
    s_power: float = 1.0
    spectrum: str = "exact"
    output_dir: str = "out"
    snapshot_every: int = 0
    newton_tol: float = 1e-11
    seed: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.tau))

    def basis(self) -> SpectralBasis:
        return build_interval_basis(self.length, self.n_modes, self.n_grid, self.s_power, self.spectrum)

    def solver(self, tau: float | None = None) -> SolverConfig:
        tau = self.tau if tau is None else tau
        return SolverConfig(self.alpha, self.m, tau, int(round(self.t_final / tau)), newton_tol=self.newton_tol)

    def to_dict(self) -> dict:
        out = asdict(self)
        extra = out.pop("extra")
        out.update(extra)
        return out


def _parse_initial(raw: Any) -> dict:
    if isinstance(raw, str):
        # shorthand "eigenfunction:1"
        kind, _, arg = raw.partition(":")
        raw = {"type": kind.strip(), "params": {"k": parse_integer(arg, "initial")} if arg else {}}
    if not isinstance(raw, dict):
        raise ConfigurationError("expected a mapping with 'type' and 'params'", key="initial")
    if "type" not in raw:
        raise ConfigurationError("missing required key", key="initial.type")
    kind = str(raw["type"])
    if kind not in INITIAL_TYPES:
        raise ConfigurationError(f"unknown type {kind!r}; choose from {INITIAL_TYPES}", key="initial.type")
    params = raw.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigurationError("expected a mapping", key="initial.params")
    clean: dict[str, Any] = {}
    for name, val in params.items():
        key = f"initial.params.{name}"
        clean[name] = str(val) if name == "path" else parse_number(val, key)
    if kind == "csv" and "path" not in clean:
        raise ConfigurationError("missing required key", key="initial.params.path")
    return {"type": kind, "params": clean}


def parse_config(data: Any) -> RunConfig:
    """Validate a raw mapping (e.g. loaded YAML) into a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigurationError("top level must be a mapping", key="<root>")
    data = copy.deepcopy(data)
    for key in _REQUIRED:
        if key not in data:
            raise ConfigurationError("missing required key", key=key)
    alpha = parse_number(data.pop("alpha"), "alpha")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"must lie in (0, 1), got {alpha}", key="alpha")
    m = parse_number(data.pop("m"), "m")
    if m <= 0:
        raise ConfigurationError(f"must be positive, got {m}", key="m")
    length = parse_number(data.pop("length"), "length")
    n_modes = parse_integer(data.pop("n_modes"), "n_modes")
    n_grid = parse_integer(data.pop("n_grid", n_modes), "n_grid")
    tau = parse_number(data.pop("tau"), "tau")
    t_final = parse_number(data.pop("t_final"), "t_final")
    if tau <= 0:
        raise ConfigurationError(f"must be positive, got {tau}", key="tau")
    if t_final <= 0:
        raise ConfigurationError(f"must be positive, got {t_final}", key="t_final")
    steps = t_final / tau
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ConfigurationError(f"t_final/tau = {steps} is not an integer", key="t_final")
    initial = _parse_initial(data.pop("initial"))
    s_power = parse_number(data.pop("s_power", 1.0), "s_power")
    spectrum = str(data.pop("spectrum", "exact"))
    if spectrum not in SPECTRA:
        raise ConfigurationError(f"unknown spectrum {spectrum!r}; choose from {SPECTRA}", key="spectrum")
    output_dir = str(data.pop("output_dir", "out"))
    snapshot_every = parse_integer(data.pop("snapshot_every", 0), "snapshot_every")
    if snapshot_every < 0:
        raise ConfigurationError("must be nonnegative", key="snapshot_every")
    newton_tol = parse_number(data.pop("newton_tol", 1e-11), "newton_tol")
    seed = parse_integer(data.pop("seed", 0), "seed")
    cfg = RunConfig(
        alpha, m, length, n_modes, n_grid, tau, t_final, initial,
        s_power, spectrum, output_dir, snapshot_every, newton_tol, seed, extra=data,
    )
    cfg.basis()  # surface basis errors (length, n_grid < n_modes, ...) at load time
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}", key="--config") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}", key="--config") from None
    return parse_config(data)


def build_initial(cfg: RunConfig, basis: SpectralBasis, base_dir: str | Path = ".") -> Field:
    """Nodal initial data described by ``cfg.initial``."""
    kind = cfg.initial["type"]
    p = cfg.initial["params"]
    amp = p.get("amplitude", 1.0)
    x = basis.grid
    if kind == "eigenfunction":
        k = int(p.get("k", 1))
        if not 1 <= k <= basis.n_modes:
            raise ConfigurationError(f"mode {k} outside 1..{basis.n_modes}", key="initial.params.k")
        return Field(basis, values=amp * basis.eigenfunction(k).values)
    if kind == "gaussian":
        center = p.get("center", 0.5 * basis.length)
        width = p.get("width", 0.1 * basis.length)
        if width <= 0:
            raise ConfigurationError("must be positive", key="initial.params.width")
        return Field(basis, values=amp * np.exp(-0.5 * ((x - center) / width) ** 2))
    if kind == "profile_scaled":
        from .separable import solve_elliptic_profile

        F0 = p.get("F0", amp)
        S = solve_elliptic_profile(basis, cfg.m)
        return Field(basis, values=F0 * S.values)
    path = Path(p["path"])
    if not path.is_absolute():
        path = Path(base_dir) / path
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read x,u table from {path}: {exc}", key="initial.params.path") from None
    if table.shape[1] < 2:
        raise ConfigurationError("table needs columns x,u", key="initial.params.path")
    order = np.argsort(table[:, 0])
    xs, us = table[order, 0], table[order, 1]
    return Field(basis, values=amp * np.interp(x, xs, us, left=0.0, right=0.0))
