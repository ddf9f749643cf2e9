"""Frequency-independent (phase-shifter) beamforming and beam split metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import czt

from .numerics import integrate_uniform
from .sysmodel import SystemConfig, array_response, normalized_frequencies, normalized_frequency

_MODULUS_TOL = 1e-12


def dirichlet_sinc(n: int, x):
    """``sin(n*pi*x/2) / sin(pi*x/2)``, continuous at the removable zeros.

    At ``x = 2k`` the value is the limit ``n * (-1)**(k*(n-1))``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    x = np.asarray(x, dtype=float)
    den = np.sin(np.pi * x / 2)
    k = np.round(x / 2)
    singular = np.abs(x - 2 * k) < 1e-13
    safe = np.where(singular, 1.0, den)
    out = np.where(singular, n * np.where((k * (n - 1)) % 2 == 0, 1.0, -1.0), np.sin(n * np.pi * x / 2) / safe)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Constant-modulus analog beamforming vector."""

    weights: np.ndarray = field(repr=False)
    kind: Literal["classical", "dpp"] = "classical"
    subcarrier: int | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.complex128)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.max(np.abs(np.abs(w) - 1 / np.sqrt(w.size))) > _MODULUS_TOL:
            raise ValueError("weights violate the constant-modulus constraint 1/sqrt(N_t)")
        object.__setattr__(self, "weights", w)

    @property
    def n_t(self) -> int:
        return self.weights.size


def _check_direction(theta) -> None:
    if np.any(np.abs(np.asarray(theta)) > 1):
        raise ValueError(f"direction must lie in [-1, 1], got {theta}")


def classical_beamformer(cfg: SystemConfig, theta: float) -> Beamformer:
    """Phase-shifter beam steered to ``theta`` at the carrier frequency."""
    _check_direction(theta)
    return Beamformer(array_response(cfg.n_t, theta), "classical")


def gain_at(weights: np.ndarray, theta, xi: float):
    """``|f_t(xi*theta)^H w|`` evaluated directly, for scalar or array ``theta``."""
    w = np.asarray(weights, dtype=np.complex128)
    theta = np.asarray(theta, dtype=float)
    flat = theta.reshape(-1)
    out = np.empty(flat.shape)
    k = np.arange(w.size)
    for start in range(0, flat.size, 4096):
        chunk = flat[start:start + 4096]
        steer = np.exp(1j * np.pi * xi * np.outer(chunk, k)) / np.sqrt(w.size)
        out[start:start + 4096] = np.abs(steer @ w)
    out = out.reshape(theta.shape)
    return float(out) if out.ndim == 0 else out


def array_gain(cfg: SystemConfig, b: Beamformer, theta, m: int):
    """Normalized array gain of ``b`` towards physical direction ``theta`` on subcarrier ``m``."""
    _check_direction(theta)
    return gain_at(b.weights, theta, normalized_frequency(cfg, m))


def gain_pattern(weights: np.ndarray, xi: float, lo: float = -1.0, hi: float = 1.0, step: float = 1e-3):
    """Gain over the uniform grid ``lo, lo+step, ..., hi`` via a chirp z-transform.

    Returns ``(thetas, gains)``. Equivalent to :func:`gain_at` on the same
    grid, at FFT cost instead of one inner product per grid point.
    """
    w = np.asarray(weights, dtype=np.complex128)
    n_points = int(round((hi - lo) / step)) + 1
    thetas = lo + step * np.arange(n_points)
    a = np.exp(-1j * np.pi * xi * lo)
    ratio = np.exp(1j * np.pi * xi * step)
    gains = np.abs(czt(w, m=n_points, w=ratio, a=a)) / np.sqrt(w.size)
    return thetas, gains


def peak_direction(weights: np.ndarray, xi: float, step: float = 1e-4, refine: float = 1e-6) -> float:
    """Grid argmax of the gain over [-1, 1].

    A ``step`` grid locates the main lobe, then a ``refine`` grid over one
    coarse cell either side pins the peak down.
    """
    thetas, gains = gain_pattern(weights, xi, step=step)
    centre = thetas[int(np.argmax(gains))]
    lo, hi = max(-1.0, centre - step), min(1.0, centre + step)
    fine, fine_gains = gain_pattern(weights, xi, lo=lo, hi=hi, step=refine)
    return float(fine[int(np.argmax(fine_gains))])


def beam_pointing_direction(theta_l: float, xi_m: float) -> float:
    """Direction a carrier-steered beam actually points to at normalized frequency ``xi_m``."""
    if xi_m <= 0:
        raise ValueError(f"xi_m must be positive, got {xi_m}")
    return theta_l / xi_m


def gain_upper_bound(n_t: int) -> float:
    """Claimed off-mainlobe gain ceiling ``1 / (n_t sin(3 pi / (2 n_t)))``.

    This is the kernel evaluated at ``x = 3/n_t``. The true first-sidelobe
    peak sits slightly inside that point and is a little higher; see
    :func:`sidelobe_peak`.
    """
    if n_t < 2:
        raise ValueError(f"n_t must be >= 2, got {n_t}")
    return 1.0 / (n_t * np.sin(3 * np.pi / (2 * n_t)))


def sidelobe_peak(n_t: int) -> float:
    """Exact maximum of ``|dirichlet_sinc(n_t, x)| / n_t`` over ``|x| >= 2/n_t``."""
    if n_t < 3:
        raise ValueError(f"n_t must be >= 3, got {n_t}")
    res = minimize_scalar(
        lambda x: -abs(dirichlet_sinc(n_t, x)) / n_t,
        bounds=(2.0 / n_t, 4.0 / n_t),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return float(-res.fun)


def bsr_from_frequencies(n_t: int, xi: np.ndarray) -> float:
    # the theta-integral of |theta| over [-1, 1] equals 1
    return float(n_t / (4 * len(xi)) * np.sum(np.abs(np.asarray(xi) - 1.0)))


def beam_split_ratio(cfg: SystemConfig, method: Literal["closed", "quadrature"] = "closed", n: int = 2048) -> float:
    """Average pointing deviation over half the beamwidth (``2/N_t``).

    Deviation per subcarrier is taken as ``|(xi_m - 1) theta|``. ``method``
    selects the closed form or Simpson quadrature over ``theta``.
    """
    xi = normalized_frequencies(cfg)
    if method == "closed":
        return bsr_from_frequencies(cfg.n_t, xi)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    spread = np.abs(xi - 1.0).sum()

    def integrand(theta):
        return spread * np.abs(theta) / (2.0 / cfg.n_t)

    return integrate_uniform(integrand, -1.0, 1.0, n) / (2 * cfg.m_subcarriers)
