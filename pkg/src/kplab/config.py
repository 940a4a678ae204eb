"""Run configuration: nested key-value config files and their dataclass form.

The file format is INI-style with dotted nested sections ([domain],
[domain.weight], [quadrature], ...).  All numbers are decimal floating
point; lists are comma-separated.  Parsing, validation, and serialization
round-trip exactly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .domain import BoundarySpec, SpectralDomain, WeightSpec
from .errors import ConfigError

MAX_N = 8


@dataclass
class RunConfig:
    """Everything a command needs, in one validated record."""

    # domain
    kind: str = "circle"
    center: tuple[float, float] = (2.0, 0.5)
    radii: tuple[float, ...] = (1.0,)
    fourier_cos: tuple[float, ...] = ()
    fourier_sin: tuple[float, ...] = ()
    weight_kind: str = "constant"
    weight_value: float = 1.0
    weight_center: tuple[float, float] = (0.0, 0.0)
    weight_sigma: float = 1.0
    # quadrature
    n_radial: int = 24
    n_angular: int = 24
    layered: str = "auto"  # auto | never | always
    layered_threshold: float = 50.0
    # reduction
    N: int = 2
    eps: float = 0.1
    moment_n_r: int = 64
    moment_n_s: int = 64
    # sweep
    t_list: tuple[float, ...] = (100.0,)
    Y: float = 0.5
    y_grid: tuple[float, float, int] | None = None  # (y_min, y_max, n_y)
    window: str = "xi"  # xi | absolute
    x_min: float = -5.0
    x_max: float = 8.0
    n_x: int = 120
    xi_ref: float = 1.0
    # output
    out_dir: str = "out"
    seed: int = 42
    workers: int = 1

    def validate(self) -> None:
        if not 0.0 < self.eps < 0.25:
            raise ConfigError(f"eps must lie in (0, 1/4), got {self.eps}")
        if not 1 <= self.N <= MAX_N:
            raise ConfigError(f"N must lie in [1, {MAX_N}], got {self.N}")
        if self.window not in ("xi", "absolute"):
            raise ConfigError(f"window must be 'xi' or 'absolute', got {self.window!r}")
        if self.layered not in ("auto", "never", "always"):
            raise ConfigError(f"layered must be auto|never|always, got {self.layered!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.n_x < 2:
            raise ConfigError("n_x must be >= 2")
        if any(t <= 0 for t in self.t_list):
            raise ConfigError("t values must be positive")

    def require_asymptotic_t(self) -> None:
        if any(t <= 1.0 for t in self.t_list):
            raise ConfigError("asymptotics commands need every t > 1")

    def domain(self) -> SpectralDomain:
        boundary = BoundarySpec(
            kind=self.kind, center=self.center, radii=self.radii,
            fourier_cos=self.fourier_cos, fourier_sin=self.fourier_sin,
        )
        weight = WeightSpec(
            kind=self.weight_kind, value=self.weight_value,
            center=self.weight_center, sigma=self.weight_sigma,
        )
        return SpectralDomain(boundary, weight)

    def y_values(self, t: float) -> list:
        if self.y_grid is None:
            return [self.Y * t]
        lo, hi, n = self.y_grid
        step = (hi - lo) / (n - 1) if n > 1 else 0.0
        return [lo + i * step for i in range(int(n))]


def _floats(s: str) -> tuple[float, ...]:
    parts = [p.strip() for p in s.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig()

    def get(section, key, default, conv=float):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
        return default

    cfg.kind = get("domain", "kind", cfg.kind, str)
    cfg.center = (get("domain", "center_p", cfg.center[0]),
                  get("domain", "center_q", cfg.center[1]))
    if cp.has_option("domain", "radius"):
        cfg.radii = (get("domain", "radius", 1.0),)
    elif cp.has_option("domain", "radius_p"):
        cfg.radii = (get("domain", "radius_p", 1.0), get("domain", "radius_q", 0.5))
    cfg.fourier_cos = get("domain", "fourier_cos", cfg.fourier_cos, _floats)
    cfg.fourier_sin = get("domain", "fourier_sin", cfg.fourier_sin, _floats)

    cfg.weight_kind = get("domain.weight", "kind", cfg.weight_kind, str)
    cfg.weight_value = get("domain.weight", "value", cfg.weight_value)
    cfg.weight_center = (get("domain.weight", "center_p", cfg.weight_center[0]),
                         get("domain.weight", "center_q", cfg.weight_center[1]))
    cfg.weight_sigma = get("domain.weight", "sigma", cfg.weight_sigma)

    cfg.n_radial = get("quadrature", "n_radial", cfg.n_radial, int)
    cfg.n_angular = get("quadrature", "n_angular", cfg.n_angular, int)
    cfg.layered = get("quadrature", "layered", cfg.layered, str)
    cfg.layered_threshold = get("quadrature", "layered_threshold", cfg.layered_threshold)

    cfg.N = get("reduction", "n", cfg.N, int)
    cfg.eps = get("reduction", "eps", cfg.eps)
    cfg.moment_n_r = get("reduction", "moment_n_r", cfg.moment_n_r, int)
    cfg.moment_n_s = get("reduction", "moment_n_s", cfg.moment_n_s, int)

    cfg.t_list = get("sweep", "t", cfg.t_list, _floats)
    cfg.Y = get("sweep", "y_ratio", cfg.Y)
    if cp.has_option("sweep", "y_min"):
        cfg.y_grid = (get("sweep", "y_min", 0.0), get("sweep", "y_max", 1.0),
                      get("sweep", "n_y", 5, int))
    cfg.window = get("sweep", "window", cfg.window, str)
    cfg.x_min = get("sweep", "x_min", cfg.x_min)
    cfg.x_max = get("sweep", "x_max", cfg.x_max)
    cfg.n_x = get("sweep", "n_x", cfg.n_x, int)
    cfg.xi_ref = get("sweep", "xi_ref", cfg.xi_ref)

    cfg.out_dir = get("output", "out_dir", cfg.out_dir, str)
    cfg.seed = get("output", "seed", cfg.seed, int)
    cfg.workers = get("output", "workers", cfg.workers, int)

    cfg.validate()
    return cfg


def parse_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    cp["domain"] = {"kind": cfg.kind,
                    "center_p": repr(cfg.center[0]),
                    "center_q": repr(cfg.center[1])}
    if cfg.kind == "circle":
        cp["domain"]["radius"] = repr(cfg.radii[0])
    elif cfg.kind == "ellipse":
        cp["domain"]["radius_p"] = repr(cfg.radii[0])
        cp["domain"]["radius_q"] = repr(cfg.radii[1])
    if cfg.fourier_cos:
        cp["domain"]["fourier_cos"] = ", ".join(repr(v) for v in cfg.fourier_cos)
    if cfg.fourier_sin:
        cp["domain"]["fourier_sin"] = ", ".join(repr(v) for v in cfg.fourier_sin)
    cp["domain.weight"] = {
        "kind": cfg.weight_kind,
        "value": repr(cfg.weight_value),
        "center_p": repr(cfg.weight_center[0]),
        "center_q": repr(cfg.weight_center[1]),
        "sigma": repr(cfg.weight_sigma),
    }
    cp["quadrature"] = {
        "n_radial": str(cfg.n_radial), "n_angular": str(cfg.n_angular),
        "layered": cfg.layered, "layered_threshold": repr(cfg.layered_threshold),
    }
    cp["reduction"] = {
        "n": str(cfg.N), "eps": repr(cfg.eps),
        "moment_n_r": str(cfg.moment_n_r), "moment_n_s": str(cfg.moment_n_s),
    }
    sweep = {
        "t": ", ".join(repr(t) for t in cfg.t_list),
        "y_ratio": repr(cfg.Y),
        "window": cfg.window,
        "x_min": repr(cfg.x_min), "x_max": repr(cfg.x_max), "n_x": str(cfg.n_x),
        "xi_ref": repr(cfg.xi_ref),
    }
    if cfg.y_grid is not None:
        sweep["y_min"] = repr(cfg.y_grid[0])
        sweep["y_max"] = repr(cfg.y_grid[1])
        sweep["n_y"] = str(int(cfg.y_grid[2]))
    cp["sweep"] = sweep
    cp["output"] = {"out_dir": cfg.out_dir, "seed": str(cfg.seed),
                    "workers": str(cfg.workers)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
