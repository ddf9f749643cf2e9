"""Delay-phase precoding (DPP): frequency-dependent beams built from a
phase-shifter beam split into ``K`` groups, each group rotated by a
per-subcarrier phase progression that a time-delay element can realize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .beam import Beamformer, dirichlet_sinc
from .numerics import integrate_uniform
from .sysmodel import (
    ConfigError,
    SystemConfig,
    array_response,
    normalized_frequencies,
    normalized_frequency,
    subcarrier_frequency,
)

EXACT_PANELS = 2048


def _require_groups(n_t: int, k_td: int) -> int:
    if k_td < 1 or n_t % k_td:
        raise ConfigError("k_td", f"need 1 <= k_td dividing n_t={n_t}, got {k_td}")
    return n_t // k_td


def rotation_factor(xi_m: float, p_group: int, theta_l: float):
    """Direction rotation factor ``(xi_m - 1) * P * theta_l``.

    Not wrapped into [-1, 1]; the phase vector is 2-periodic in it anyway.
    """
    return (np.asarray(xi_m) - 1.0) * p_group * theta_l


def min_td_elements(cfg: SystemConfig) -> float:
    """Smallest real ``K`` keeping every rotation factor inside [-1, 1]."""
    f_top = subcarrier_frequency(cfg, cfg.m_subcarriers)
    return (f_top / cfg.f_c - 1.0) * cfg.n_t


def smallest_valid_k(cfg: SystemConfig) -> int:
    """Smallest divisor of ``n_t`` that is at least :func:`min_td_elements`."""
    need = max(1, math.ceil(min_td_elements(cfg) - 1e-9))
    for k in range(need, cfg.n_t + 1):
        if cfg.n_t % k == 0:
            return k
    return cfg.n_t


def phase_progression(k_td: int, beta) -> np.ndarray:
    """Delay-layer phases ``exp(-j*pi*k*beta)``, k = 0..K-1 (rows follow ``beta``)."""
    beta = np.asarray(beta, dtype=float)
    return np.exp(-1j * np.pi * beta[..., None] * np.arange(k_td))


@dataclass(frozen=True, eq=False)
class DppDesign:
    theta_l: float
    k_td: int
    p_group: int
    ps_segment_vectors: np.ndarray = field(repr=False)  # (K, P)
    rotation_factors: np.ndarray = field(repr=False)  # (M,)

    def beam(self, m: int) -> np.ndarray:
        p = phase_progression(self.k_td, self.rotation_factors[m - 1])
        return (self.ps_segment_vectors * p[:, None]).reshape(-1)


def dpp_design(cfg: SystemConfig, theta_l: float) -> DppDesign:
    if abs(theta_l) > 1:
        raise ValueError(f"theta_l must lie in [-1, 1], got {theta_l}")
    p = _require_groups(cfg.n_t, cfg.k_td)
    segments = array_response(cfg.n_t, theta_l).reshape(cfg.k_td, p)
    beta = rotation_factor(normalized_frequencies(cfg), p, theta_l)
    return DppDesign(float(theta_l), cfg.k_td, p, segments, beta)


def dpp_beamformer(cfg: SystemConfig, theta_l: float, m: int) -> Beamformer:
    """Frequency-dependent beam for subcarrier ``m`` aimed at ``theta_l``.

    Group ``k`` of ``P`` phase-shifter weights (the carrier-steered beam) is
    multiplied by ``exp(-j*pi*k*beta_m)``.
    """
    if abs(theta_l) > 1:
        raise ValueError(f"theta_l must lie in [-1, 1], got {theta_l}")
    p = _require_groups(cfg.n_t, cfg.k_td)
    beta = rotation_factor(normalized_frequency(cfg, m), p, theta_l)
    weights = array_response(cfg.n_t, theta_l) * np.repeat(phase_progression(cfg.k_td, beta), p)
    return Beamformer(weights, "dpp", m)


def dpp_pointing_direction(theta_l: float, xi_m: float, p_group: int, beta: float) -> float:
    """Predicted beam peak ``theta_l/xi_m + beta/(xi_m P)``."""
    if xi_m <= 0:
        raise ValueError(f"xi_m must be positive, got {xi_m}")
    return theta_l / xi_m + beta / (xi_m * p_group)


def dpp_peak_gain(n_t: int, k_td: int, beta: float) -> float:
    """Gain at the predicted peak, ``(K/N_t) |Xi_P(beta/P)|``."""
    p = _require_groups(n_t, k_td)
    return float(k_td / n_t * abs(dirichlet_sinc(p, beta / p)))


def dpp_gain_closed_form(n_t: int, k_td: int, theta_l: float, theta, xi_m: float, beta: float):
    """Factorized DPP gain ``|Xi_K(P u + beta) Xi_P(u)| / N_t`` with ``u = theta_l - xi_m theta``."""
    p = _require_groups(n_t, k_td)
    u = theta_l - xi_m * np.asarray(theta, dtype=float)
    out = np.abs(dirichlet_sinc(k_td, p * u + beta) * dirichlet_sinc(p, u)) / n_t
    return float(out) if np.ndim(out) == 0 else out


def _expected(cfg: SystemConfig, mode: str, power: int) -> float:
    p = _require_groups(cfg.n_t, cfg.k_td)
    xi = normalized_frequencies(cfg)
    scale = (cfg.k_td / cfg.n_t) ** power
    if mode == "approx":
        # quadratic through (-1, |Xi(1-xi)|^q), (0, P^q), (1, |Xi(xi-1)|^q)
        edge = np.abs(dirichlet_sinc(p, xi - 1.0)) ** power
        return float(scale * np.mean(edge / 3 + 2 * p**power / 3))
    if mode != "exact":
        raise ValueError(f"mode must be 'approx' or 'exact', got {mode!r}")
    total = 0.0
    for x in xi:
        total += integrate_uniform(lambda t: np.abs(dirichlet_sinc(p, (x - 1.0) * t)) ** power, -1.0, 1.0, EXACT_PANELS)
    return float(scale * total / (2 * len(xi)))


def expected_gain(cfg: SystemConfig, mode: Literal["approx", "exact"] = "approx") -> float:
    """Mean DPP gain at the target over ``theta_l ~ U[-1, 1]`` and all subcarriers."""
    return _expected(cfg, mode, 1)


def expected_gain_squared(cfg: SystemConfig, mode: Literal["approx", "exact"] = "approx") -> float:
    """Mean squared DPP gain; lower-bounds the DPP-to-optimal rate ratio."""
    return _expected(cfg, mode, 2)
