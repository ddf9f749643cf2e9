"""True-time-delay realization of DPP and the hybrid precoders built on it.

All three precoders share one shape: per RF chain ``l`` a phase-shifter
weight vector split into ``K`` groups, one delay per group, and a digital
precoder per subcarrier from the SVD of the equivalent channel.

* :func:`algorithm1_precode` -- TTD-DPP, ``K`` delay lines per RF chain.
* :func:`classical_hybrid_precode` -- phase shifters only (``K = 1``, zero delay).
* :func:`full_ttd_precode` -- one delay line per antenna (``K = N_t``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import svd
from .sysmodel import ConfigError, SystemConfig, WidebandChannel, array_response, subcarrier_frequencies

DEFAULT_TTD_STEP_S = 4e-12


def ttd_delays(cfg: SystemConfig, theta_l: float, step_s: float | None = None) -> np.ndarray:
    """Delays (seconds) of the ``K`` delay elements serving direction ``theta_l``.

    Element ``i`` (1-based) delays by ``i * s`` carrier periods with
    ``s = P theta_l / 2``. For ``theta_l < 0`` the ramp is shifted up by
    ``K |s|`` periods so the smallest delay is 0. Delays stay in
    ``[0, N_t/2 * T_c]``. ``step_s`` rounds them to a hardware grid.
    """
    if abs(theta_l) > 1:
        raise ValueError(f"theta_l must lie in [-1, 1], got {theta_l}")
    p = cfg.p_group
    s = p * theta_l / 2.0
    i = np.arange(1, cfg.k_td + 1)
    periods = i * s if theta_l >= 0 else cfg.k_td * abs(s) + i * s
    delays = periods * cfg.carrier_period
    if step_s:
        delays = np.round(delays / step_s) * step_s
    return delays


def ps_segment_phases(cfg: SystemConfig, theta_l: float, delays: np.ndarray | None = None) -> np.ndarray:
    """Phase-shifter weights as ``(K, P)`` groups.

    Group ``k`` is the matching slice of ``f_t(theta_l)`` times
    ``exp(j*2*pi*f_c*t_k)``, which cancels the delay line's phase at the
    carrier, so the realized beam equals ``f_t(theta_l)`` at ``f_c`` and the
    DPP beam (up to a global phase) elsewhere. Without ``delays`` the
    unquantized delays of :func:`ttd_delays` are used.
    """
    if abs(theta_l) > 1:
        raise ValueError(f"theta_l must lie in [-1, 1], got {theta_l}")
    if delays is None:
        delays = ttd_delays(cfg, theta_l)
    base = array_response(cfg.n_t, theta_l).reshape(cfg.k_td, cfg.p_group)
    return base * np.exp(2j * np.pi * cfg.f_c * np.asarray(delays))[:, None]


@dataclass(frozen=True, eq=False)
class TtdPrecoder:
    """Hybrid precoder ``A_u @ A_ttd(m) @ D_m``.

    ``ps_weights[l]`` holds the non-zero column entries of ``A_u`` for RF
    chain ``l`` as ``(K, P)`` groups; ``delays`` is ``(N_RF, K)``; ``d`` is
    ``(M, N_RF, N_s)``.
    """

    ps_weights: np.ndarray = field(repr=False)
    delays: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    frequencies: np.ndarray = field(repr=False)
    scheme: str = "ttd_dpp"

    @property
    def n_rf(self) -> int:
        return self.ps_weights.shape[0]

    @property
    def k_td(self) -> int:
        return self.ps_weights.shape[1]

    @property
    def n_t(self) -> int:
        return self.ps_weights.shape[1] * self.ps_weights.shape[2]

    @property
    def a_u(self) -> np.ndarray:
        """Dense ``(N_t, K*N_RF)`` phase-shifter matrix, block diagonal per RF chain."""
        n_rf, k, p = self.ps_weights.shape
        out = np.zeros((self.n_t, k * n_rf), dtype=np.complex128)
        for l in range(n_rf):
            for j in range(k):
                out[j * p:(j + 1) * p, l * k + j] = self.ps_weights[l, j]
        return out

    def a_ttd(self, m: int) -> np.ndarray:
        """Dense ``(K*N_RF, N_RF)`` delay-layer matrix for subcarrier ``m`` (1-based)."""
        n_rf, k = self.delays.shape
        out = np.zeros((k * n_rf, n_rf), dtype=np.complex128)
        phases = np.exp(-2j * np.pi * self.frequencies[m - 1] * self.delays)
        for l in range(n_rf):
            out[l * k:(l + 1) * k, l] = phases[l]
        return out

    def analog(self) -> np.ndarray:
        """Effective analog beamformers ``A_u A_ttd(m)`` for all subcarriers, ``(M, N_t, N_RF)``."""
        phases = np.exp(-2j * np.pi * self.frequencies[:, None, None] * self.delays[None])  # (M, N_RF, K)
        beams = self.ps_weights[None] * phases[..., None]  # (M, N_RF, K, P)
        return np.swapaxes(beams.reshape(len(self.frequencies), self.n_rf, self.n_t), -1, -2)

    def precoders(self) -> np.ndarray:
        """Overall precoders ``A_m D_m``, ``(M, N_t, N_s)``."""
        return self.analog() @ self.d


def _digital_precoders(cfg: SystemConfig, channel: WidebandChannel, analog: np.ndarray) -> np.ndarray:
    # D_m = mu * V_eq[:, :N_s], with mu fixing ||A_m D_m||_F^2 = N_s per subcarrier
    h_eq = channel.effective() @ analog
    v = svd(h_eq).right_vectors
    if v.shape[-1] < cfg.n_s:
        # H_eq has fewer rows than streams; pad with the orthogonal complement
        v = _pad_columns(v, cfg.n_s)
    d = v[..., :cfg.n_s]
    norm = np.linalg.norm(analog @ d, axis=(-2, -1))
    return d * (np.sqrt(cfg.n_s) / norm)[:, None, None]


def _pad_columns(v: np.ndarray, n: int) -> np.ndarray:
    out = np.empty(v.shape[:-1] + (n,), dtype=np.complex128)
    rows = v.shape[-2]
    for i in range(v.shape[0]):
        q, _ = np.linalg.qr(np.hstack([v[i], np.eye(rows, dtype=np.complex128)]))
        out[i, :, : v.shape[-1]] = v[i]
        out[i, :, v.shape[-1]:] = q[:, v.shape[-1]:n]
    return out


def _served_directions(cfg: SystemConfig, channel: WidebandChannel) -> list[float]:
    if cfg.n_rf > len(channel.paths):
        raise ConfigError("n_rf", f"{cfg.n_rf} RF chains but only {len(channel.paths)} paths to serve")
    gains = [abs(p.gain) for p in channel.paths]
    if any(a < b for a, b in zip(gains, gains[1:])):
        raise ValueError("channel paths must be sorted by descending gain magnitude")
    return [p.theta for p in channel.paths[: cfg.n_rf]]


def algorithm1_precode(cfg: SystemConfig, channel: WidebandChannel, step_s: float | None = None) -> TtdPrecoder:
    """TTD-DPP hybrid precoding; RF chain ``l`` serves the ``l``-th strongest path.

    ``step_s`` quantizes delays; by default ``cfg.ttd_step_ps`` decides.
    """
    if cfg.k_td < 1:
        raise ConfigError("k_td", "TTD-DPP needs at least one delay element per RF chain")
    if step_s is None and cfg.ttd_step_ps > 0:
        step_s = cfg.ttd_step_ps * 1e-12
    thetas = _served_directions(cfg, channel)
    delays = np.stack([ttd_delays(cfg, t, step_s) for t in thetas])
    ps = np.stack([ps_segment_phases(cfg, t, d) for t, d in zip(thetas, delays)])
    freqs = subcarrier_frequencies(cfg)
    pre = TtdPrecoder(ps, delays, np.empty((0,)), freqs, "ttd_dpp")
    d = _digital_precoders(cfg, channel, pre.analog())
    return TtdPrecoder(ps, delays, d, freqs, "ttd_dpp")


def classical_hybrid_precode(cfg: SystemConfig, channel: WidebandChannel) -> TtdPrecoder:
    """Phase-shifter-only hybrid precoding: analog columns ``f_t(theta_l)`` on every subcarrier."""
    thetas = _served_directions(cfg, channel)
    ps = np.stack([array_response(cfg.n_t, t) for t in thetas])[:, None, :]
    delays = np.zeros((len(thetas), 1))
    freqs = subcarrier_frequencies(cfg)
    pre = TtdPrecoder(ps, delays, np.empty((0,)), freqs, "classical_hp")
    d = _digital_precoders(cfg, channel, pre.analog())
    return TtdPrecoder(ps, delays, d, freqs, "classical_hp")


def full_ttd_precode(cfg: SystemConfig, channel: WidebandChannel) -> TtdPrecoder:
    """One delay line per antenna; the analog beams equal ``f_t(xi_m theta_l)`` up to a phase."""
    full = cfg.with_(k_td=cfg.n_t)
    pre = algorithm1_precode(full, channel, step_s=0.0)
    return TtdPrecoder(pre.ps_weights, pre.delays, pre.d, pre.frequencies, "ttd_full")
