"""Wideband THz massive-MIMO precoding: beam split analysis, delay-phase
precoding and its true-time-delay realization."""

__version__ = "0.1.0"

from .sysmodel import ConfigError, SystemConfig, WidebandChannel, generate_channel  # noqa: E402

__all__ = ["ConfigError", "SystemConfig", "WidebandChannel", "generate_channel", "__version__"]
