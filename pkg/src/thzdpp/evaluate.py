"""Achievable rates, the fully-digital benchmark and the power / energy-efficiency model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dpp import expected_gain_squared
from .numerics import logdet_hermitian_psd, svd
from .sysmodel import SystemConfig, WidebandChannel

SCHEMES = ("optimal", "ttd_dpp", "classical_hp", "ttd_full")
POWER_SCHEMES = ("classical_hp", "ttd_full", "ttd_dpp")


@dataclass(frozen=True, eq=False)
class RateReport:
    per_subcarrier_rates: np.ndarray = field(repr=False)
    snr_db: float
    scheme: str

    def __post_init__(self):
        rates = np.asarray(self.per_subcarrier_rates, dtype=float)
        if np.any(rates < -1e-12):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "per_subcarrier_rates", np.maximum(rates, 0.0))

    @property
    def total(self) -> float:
        return float(np.sum(self.per_subcarrier_rates))

    @property
    def mean(self) -> float:
        """Rate per subcarrier in bits/s/Hz."""
        return float(np.mean(self.per_subcarrier_rates))


@dataclass(frozen=True)
class PowerModel:
    """Component powers in mW (transmit, baseband, RF chain, phase shifter, delay line)."""

    p_t: float = 30.0
    p_bb: float = 300.0
    p_rf: float = 200.0
    p_ps: float = 20.0
    p_ttd: float = 100.0

    def __post_init__(self):
        for name in ("p_t", "p_bb", "p_rf", "p_ps", "p_ttd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _snr_scale(cfg: SystemConfig, snr_db: float | None) -> tuple[float, float]:
    snr_db = cfg.snr_db if snr_db is None else snr_db
    return snr_db, 10.0 ** (snr_db / 10.0) / cfg.n_s


def achievable_rate(
    cfg: SystemConfig,
    channel: WidebandChannel,
    a_m: np.ndarray,
    d_m: np.ndarray,
    snr_db: float | None = None,
    scheme: str = "ttd_dpp",
) -> RateReport:
    """Per-subcarrier ``log2 det(I + snr/N_s * G G^H)`` with ``G = H_m^H A_m D_m``.

    ``a_m`` is ``(M, N_t, N_RF)`` (or a single ``(N_t, N_RF)`` shared by all
    subcarriers) and ``d_m`` is ``(M, N_RF, N_s)``.
    """
    precoder = np.asarray(a_m) @ np.asarray(d_m)
    if precoder.ndim == 2:
        precoder = np.broadcast_to(precoder, (channel.n_subcarriers,) + precoder.shape)
    power = np.sum(np.abs(precoder) ** 2, axis=(-2, -1))
    if np.max(np.abs(power - cfg.n_s)) > 1e-6:
        raise ValueError(f"power constraint ||A_m D_m||_F^2 = {cfg.n_s} violated (max error {np.max(np.abs(power - cfg.n_s)):.3g})")
    snr_db, scale = _snr_scale(cfg, snr_db)
    g = channel.effective() @ precoder
    gram = np.eye(cfg.n_r) + scale * (g @ np.swapaxes(g, -1, -2).conj())
    return RateReport(logdet_hermitian_psd(gram), snr_db, scheme)


def channel_singular_values(channel: WidebandChannel) -> np.ndarray:
    """Ordered singular values of every ``H_m``, shape ``(M, min(N_t, N_r))``."""
    return svd(channel.h).singular_values


def optimal_rate(
    cfg: SystemConfig,
    channel: WidebandChannel,
    snr_db: float | None = None,
    singular_values: np.ndarray | None = None,
) -> RateReport:
    """Unconstrained fully-digital rate with equal power on the ``N_s`` strongest modes."""
    snr_db, scale = _snr_scale(cfg, snr_db)
    sv = channel_singular_values(channel) if singular_values is None else singular_values
    top = np.zeros((sv.shape[0], cfg.n_s))
    k = min(cfg.n_s, sv.shape[1])
    top[:, :k] = sv[:, :k]
    return RateReport(np.sum(np.log2(1.0 + scale * top**2), axis=-1), snr_db, "optimal")


def optimal_precoder(cfg: SystemConfig, channel: WidebandChannel) -> np.ndarray:
    """Right singular vectors of ``H_m^H`` for the ``N_s`` strongest modes, ``(M, N_t, N_s)``."""
    v = svd(channel.effective()).right_vectors
    return v[..., : cfg.n_s]


def rate_lower_bound(cfg: SystemConfig) -> float:
    """Lower bound on the TTD-DPP to optimal rate ratio (mean squared DPP gain)."""
    return expected_gain_squared(cfg, "approx")


def power_consumption(model: PowerModel, scheme: str, cfg: SystemConfig) -> float:
    """Total power (mW) of a transmitter architecture with ``N = N_t`` antennas."""
    base = model.p_t + model.p_bb + cfg.n_rf * model.p_rf
    n = cfg.n_t
    if scheme == "classical_hp":
        return base + cfg.n_rf * n * model.p_ps
    if scheme == "ttd_full":
        return base + cfg.n_rf * n * model.p_ttd
    if scheme == "ttd_dpp":
        return base + cfg.n_rf * cfg.k_td * model.p_ttd + cfg.n_rf * n * model.p_ps
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {POWER_SCHEMES}")


def energy_efficiency(rate_bps_hz: float, power_mw: float) -> float:
    if power_mw <= 0:
        raise ValueError(f"power must be positive, got {power_mw}")
    return rate_bps_hz / power_mw
