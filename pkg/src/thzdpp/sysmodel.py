"""System configuration, OFDM subcarrier grid, ULA responses and the
wideband ray-based channel.

Directions are always handled as sines of the geometric angle, so a
"direction" is a number in [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
MAX_PATH_DELAY_S = 20e-9


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending parameter."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SystemConfig:
    """Scenario parameters. Defaults reproduce the THz simulation setup
    (256 BS antennas, 300 GHz carrier, 30 GHz bandwidth, 128 subcarriers,
    4 paths / RF chains / streams, 16 delay elements per RF chain)."""

    n_t: int = 256
    n_r: int = 4
    n_rf: int = 4
    n_s: int = 4
    n_paths: int = 4
    m_subcarriers: int = 128
    f_c: float = 300e9
    bandwidth: float = 30e9
    k_td: int = 16
    snr_db: float = 10.0
    seed: int = 0
    # 0 disables delay quantization
    ttd_step_ps: float = 0.0

    def __post_init__(self):
        for name in ("n_t", "n_r", "n_rf", "n_s", "n_paths", "m_subcarriers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(name, "must be >= 1")
        if self.k_td < 0:
            raise ConfigError("k_td", "must be >= 0")
        if self.k_td > 0 and self.n_t % self.k_td:
            raise ConfigError("k_td", f"must divide n_t={self.n_t}")
        if self.n_s > self.n_rf:
            raise ConfigError("n_s", f"must not exceed n_rf={self.n_rf}")
        if self.n_rf > self.n_t:
            raise ConfigError("n_rf", f"must not exceed n_t={self.n_t}")
        if self.n_rf > self.n_paths:
            raise ConfigError("n_rf", f"must not exceed n_paths={self.n_paths} (one path per RF chain)")
        if not np.isfinite(self.bandwidth) or self.bandwidth < 0:
            raise ConfigError("bandwidth", "must be finite and >= 0")
        if not np.isfinite(self.f_c) or self.f_c <= self.bandwidth / 2:
            raise ConfigError("f_c", "must exceed bandwidth / 2")
        if not np.isfinite(self.snr_db):
            raise ConfigError("snr_db", "must be finite")
        if self.ttd_step_ps < 0:
            raise ConfigError("ttd_step_ps", "must be >= 0")

    @property
    def antenna_spacing(self) -> float:
        return SPEED_OF_LIGHT / (2.0 * self.f_c)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def carrier_period(self) -> float:
        return 1.0 / self.f_c

    @property
    def p_group(self) -> int:
        """Antennas driven by one delay element."""
        if self.k_td < 1:
            raise ConfigError("k_td", "no delay elements configured")
        return self.n_t // self.k_td

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @classmethod
    def field_types(cls) -> dict[str, type]:
        hints = {"int": int, "float": float}
        return {f.name: hints[f.type] if isinstance(f.type, str) else f.type for f in fields(cls)}


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    delay_s: float
    theta: float
    phi: float

    def __post_init__(self):
        if abs(self.theta) > 1 or abs(self.phi) > 1:
            raise ValueError(f"directions must lie in [-1, 1], got theta={self.theta}, phi={self.phi}")
        if self.delay_s < 0:
            raise ValueError(f"delay must be >= 0, got {self.delay_s}")


@dataclass(frozen=True, eq=False)
class WidebandChannel:
    """Per-subcarrier channel matrices ``h[m]`` of shape ``(n_t, n_r)``."""

    paths: tuple[PathComponent, ...]
    h: np.ndarray = field(repr=False)

    @property
    def n_subcarriers(self) -> int:
        return self.h.shape[0]

    def effective(self) -> np.ndarray:
        """``H_m^H`` stacked, shape ``(M, n_r, n_t)``; the matrix seen by the precoder."""
        return np.swapaxes(self.h, -1, -2).conj()


def _check_index(cfg: SystemConfig, m: int) -> None:
    if not 1 <= m <= cfg.m_subcarriers:
        raise ValueError(f"subcarrier index must be in 1..{cfg.m_subcarriers}, got {m}")


def subcarrier_frequencies(cfg: SystemConfig) -> np.ndarray:
    m = np.arange(1, cfg.m_subcarriers + 1)
    return cfg.f_c + cfg.bandwidth / cfg.m_subcarriers * (m - 1 - (cfg.m_subcarriers - 1) / 2)


def subcarrier_frequency(cfg: SystemConfig, m: int) -> float:
    """Frequency of subcarrier ``m`` (1-based) in Hz."""
    _check_index(cfg, m)
    return float(cfg.f_c + cfg.bandwidth / cfg.m_subcarriers * (m - 1 - (cfg.m_subcarriers - 1) / 2))


def normalized_frequencies(cfg: SystemConfig) -> np.ndarray:
    """``f_m / f_c`` for all subcarriers."""
    return subcarrier_frequencies(cfg) / cfg.f_c


def normalized_frequency(cfg: SystemConfig, m: int) -> float:
    return subcarrier_frequency(cfg, m) / cfg.f_c


def array_response(n: int, spatial_direction) -> np.ndarray:
    """Unit-norm ULA response, entries ``exp(-j*pi*k*psi)/sqrt(n)``.

    A 1-D array of directions gives one response per row.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    psi = np.asarray(spatial_direction, dtype=float)
    k = np.arange(n)
    return np.exp(-1j * np.pi * psi[..., None] * k) / np.sqrt(n)


def spatial_direction(cfg: SystemConfig, physical_direction: float, m: int) -> float:
    if abs(physical_direction) > 1:
        raise ValueError(f"physical direction must lie in [-1, 1], got {physical_direction}")
    return normalized_frequency(cfg, m) * physical_direction


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """PCG64 stream for one Monte-Carlo trial.

    Streams are derived as ``SeedSequence(seed, spawn_key=(trial,))`` so any
    trial can be regenerated on its own, in any order or process.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def channel_from_paths(cfg: SystemConfig, paths: Sequence[PathComponent]) -> WidebandChannel:
    """Assemble ``H_m = sum_l g_l e^{-j2pi tau_l f_m} f_t(xi_m theta_l) f_r(xi_m phi_l)^H``.

    Paths are stored sorted by descending gain magnitude.
    """
    if not paths:
        raise ValueError("need at least one path")
    ordered = tuple(sorted(paths, key=lambda p: -abs(p.gain)))
    freqs = subcarrier_frequencies(cfg)
    xi = freqs / cfg.f_c
    h = np.zeros((cfg.m_subcarriers, cfg.n_t, cfg.n_r), dtype=np.complex128)
    for p in ordered:
        coef = p.gain * np.exp(-2j * np.pi * p.delay_s * freqs)
        ft = array_response(cfg.n_t, xi * p.theta)
        fr = array_response(cfg.n_r, xi * p.phi)
        h += coef[:, None, None] * ft[:, :, None] * fr[:, None, :].conj()
    return WidebandChannel(ordered, h)


def generate_channel(cfg: SystemConfig, trial: int = 0) -> WidebandChannel:
    """Random channel for Monte-Carlo trial ``trial`` of ``cfg.seed``.

    Gains are CN(0, 1), delays U(0, 20 ns), geometric angles
    U[-pi/2, pi/2] at both ends (stored as sines).
    """
    rng = trial_rng(cfg.seed, trial)
    n = cfg.n_paths
    gains = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    delays = rng.uniform(0.0, MAX_PATH_DELAY_S, n)
    theta = np.sin(rng.uniform(-np.pi / 2, np.pi / 2, n))
    phi = np.sin(rng.uniform(-np.pi / 2, np.pi / 2, n))
    paths = [
        PathComponent(complex(g), float(d), float(t), float(p))
        for g, d, t, p in zip(gains, delays, theta, phi)
    ]
    return channel_from_paths(cfg, paths)


# Parameter triples of the sub-6 GHz / mmWave / THz comparison scenarios
PRESETS: dict[str, dict[str, float]] = {
    "sub6": {"f_c": 3.5e9, "n_t": 16, "m_subcarriers": 128, "bandwidth": 0.1e9},
    "mmwave": {"f_c": 28e9, "n_t": 64, "m_subcarriers": 128, "bandwidth": 2e9},
    "thz": {"f_c": 300e9, "n_t": 256, "m_subcarriers": 128, "bandwidth": 30e9},
}


def preset_config(name: str, base: SystemConfig | None = None) -> SystemConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(base or SystemConfig(), **PRESETS[name])
