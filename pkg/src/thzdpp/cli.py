"""Experiment runner: CSV tables and gnuplot scripts for the beam-split and
delay-phase precoding studies.

Usage::

    thzdpp rate-sweep --trials 100 --out rates.csv --emit-plot
    thzdpp bsr --preset thz
    thzdpp gain-profile --theta 0.5 --scheme classical --preset thz

Configuration precedence is built-in defaults < ``--preset`` < ``--config``
file < individual flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .beam import beam_split_ratio, gain_at, gain_pattern
from .dpp import expected_gain_squared, phase_progression, rotation_factor
from .evaluate import (
    PowerModel,
    achievable_rate,
    channel_singular_values,
    energy_efficiency,
    optimal_rate,
    power_consumption,
)
from .sysmodel import (
    PRESETS,
    ConfigError,
    SystemConfig,
    array_response,
    generate_channel,
    normalized_frequencies,
    preset_config,
)
from .ttd import algorithm1_precode, classical_hybrid_precode, full_ttd_precode

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_RUNTIME = 3

COLUMNS: dict[str, tuple[tuple[str, type], ...]] = {
    "beam-pattern": (("theta", float), ("scheme", str), ("freq_label", str), ("gain", float)),
    "gain-profile": (("m", int), ("scheme", str), ("bandwidth_hz", float), ("gain", float)),
    "bsr": (("fc_hz", float), ("nt", int), ("m_subcarriers", int), ("bandwidth_hz", float), ("bsr", float)),
    "rate-sweep": (("snr_db", float), ("scheme", str), ("mean_rate", float), ("stderr", float)),
    "k-sweep": (("k", int), ("mean_rate", float), ("stderr", float)),
    "energy-sweep": (("n_rf", int), ("scheme", str), ("mean_rate", float), ("power_mw", float), ("ee", float)),
}
EXPERIMENTS = tuple(COLUMNS)

DEFAULT_TRIALS = 100
DEFAULT_THETA = 0.5
DEFAULT_SNR_GRID = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
DEFAULT_K_GRID = (2, 4, 8, 16, 32)
DEFAULT_MAX_RF = 16
PROFILE_SCHEMES = ("classical", "dpp")
RATE_SCHEMES = ("optimal", "ttd_dpp", "classical_hp", "lower_bound")
BASELINE_NOTE = (
    "external baselines (rate-optimization hybrid precoding, wide-beam codebooks) are not implemented; "
    "only schemes built by this package are reported"
)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run. ``cfg`` is the fully resolved configuration."""

    name: str
    cfg: SystemConfig = field(default_factory=SystemConfig)
    trials: int = DEFAULT_TRIALS
    out_path: Path | None = None
    emit_plot: bool = False
    theta: float = DEFAULT_THETA
    snr_db: tuple[float, ...] | None = None
    k_values: tuple[int, ...] | None = None
    schemes: tuple[str, ...] | None = None
    bandwidths: tuple[float, ...] | None = None
    presets: tuple[str, ...] | None = None
    workers: int = 1

    def __post_init__(self):
        if self.name not in COLUMNS:
            raise ConfigError("experiment", f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if not -1.0 <= self.theta <= 1.0:
            raise ConfigError("theta", "must lie in [-1, 1]")
        if self.schemes is not None:
            bad = [s for s in self.schemes if s not in PROFILE_SCHEMES]
            if bad:
                raise ConfigError("scheme", f"unknown scheme(s) {bad}; choose from {PROFILE_SCHEMES}")
        if self.presets is not None:
            bad = [p for p in self.presets if p not in PRESETS]
            if bad:
                raise ConfigError("preset", f"unknown preset(s) {bad}; choose from {sorted(PRESETS)}")


@dataclass
class ExperimentReport:
    name: str
    header: list[tuple[str, str]]
    rows: list[tuple]

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(c for c, _ in COLUMNS[self.name])

    def body(self) -> str:
        """Column header and data rows only; deterministic for a given spec."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_csv(self, timestamp: str | None = None) -> str:
        lines = [f"# {k} = {v}\r\n" for k, v in self.header]
        if timestamp is not None:
            lines.append(f"# generated = {timestamp}\r\n")
        return "".join(lines) + self.body()


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def read_csv(path_or_text: str | Path) -> tuple[dict[str, str], list[tuple]]:
    """Parse a report back into its header mapping and typed rows."""
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    header: dict[str, str] = {}
    data = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
        elif line:
            data.append(line)
    reader = csv.reader(data)
    names = next(reader)
    name = header.get("experiment")
    types = dict(COLUMNS[name]) if name in COLUMNS else {}
    if name in COLUMNS and tuple(names) != tuple(types):
        raise ValueError(f"column header {names} does not match experiment {name!r}")
    rows = [tuple(types.get(c, str)(v) for c, v in zip(names, rec)) for rec in reader]
    return header, rows


# --------------------------------------------------------------------------
# configuration


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def _convert(name: str, kind: type, value):
    if isinstance(value, str):
        try:
            number = float(value)
        except ValueError:
            raise ConfigError(name, f"not a number: {value!r}") from None
    else:
        number = float(value)
    if kind is int:
        if not number.is_integer():
            raise ConfigError(name, f"must be an integer, got {value!r}")
        return int(number)
    return number


def apply_overrides(cfg: SystemConfig, overrides: dict) -> SystemConfig:
    """Return ``cfg`` with ``overrides`` (strings or numbers) applied and validated."""
    types = SystemConfig.field_types()
    changes = {}
    for key, value in overrides.items():
        if key not in types:
            raise ConfigError(key, f"unknown parameter; valid keys: {', '.join(types)}")
        changes[key] = _convert(key, types[key], value)
    return cfg.with_(**changes) if changes else cfg


def resolve_config(
    preset: str | None = None,
    config_file: str | Path | None = None,
    overrides: dict | None = None,
) -> SystemConfig:
    cfg = SystemConfig()
    if preset is not None:
        cfg = preset_config(preset, cfg)
    if config_file is not None:
        try:
            text = Path(config_file).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {config_file}: {exc.strerror}") from None
        cfg = apply_overrides(cfg, parse_config_text(text, str(config_file)))
    return apply_overrides(cfg, overrides or {})


# --------------------------------------------------------------------------
# experiments


def _header(spec: ExperimentSpec, **extra) -> list[tuple[str, str]]:
    items = [("experiment", spec.name), ("version", __version__), ("seed", str(spec.cfg.seed))]
    items += [(k, _fmt(v)) for k, v in extra.items()]
    items += [(f"config.{k}", _fmt(v)) for k, v in asdict(spec.cfg).items()]
    return items


def _dpp_weights(cfg: SystemConfig, theta: float, xi: float) -> np.ndarray:
    p = cfg.p_group
    beta = rotation_factor(xi, p, theta)
    return array_response(cfg.n_t, theta) * np.repeat(phase_progression(cfg.k_td, beta), p)


def _beam_pattern(spec: ExperimentSpec) -> ExperimentReport:
    cfg = spec.cfg
    xi = normalized_frequencies(cfg)
    freqs = (("f1", xi[0]), ("fc", 1.0), ("fM", xi[-1]))
    rows = []
    weights = {"classical": lambda x: array_response(cfg.n_t, spec.theta), "dpp": lambda x: _dpp_weights(cfg, spec.theta, x)}
    for scheme in spec.schemes or PROFILE_SCHEMES:
        for label, x in freqs:
            thetas, gains = gain_pattern(weights[scheme](x), x)
            rows += [(float(t), scheme, label, float(g)) for t, g in zip(thetas, gains)]
    return ExperimentReport(spec.name, _header(spec, theta=spec.theta, grid_step=1e-3), rows)


def _gain_profile(spec: ExperimentSpec) -> ExperimentReport:
    rows = []
    for bw in spec.bandwidths or (spec.cfg.bandwidth,):
        cfg = apply_overrides(spec.cfg, {"bandwidth": bw})
        xi = normalized_frequencies(cfg)
        for scheme in spec.schemes or PROFILE_SCHEMES:
            for m, x in enumerate(xi, 1):
                w = array_response(cfg.n_t, spec.theta) if scheme == "classical" else _dpp_weights(cfg, spec.theta, x)
                rows.append((m, scheme, float(cfg.bandwidth), gain_at(w, spec.theta, x)))
    return ExperimentReport(spec.name, _header(spec, theta=spec.theta), rows)


def _bsr(spec: ExperimentSpec) -> ExperimentReport:
    configs = [spec.cfg] if spec.presets is None else [preset_config(p, spec.cfg) for p in spec.presets]
    rows = [(c.f_c, c.n_t, c.m_subcarriers, c.bandwidth, beam_split_ratio(c)) for c in configs]
    return ExperimentReport(spec.name, _header(spec), rows)


def _stats(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over the first axis."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / np.sqrt(n)


def _map_trials(fn: Callable[[int], np.ndarray], trials: int, workers: int) -> np.ndarray:
    # results come back in trial order whatever the scheduling
    if workers == 1 or trials == 1:
        return np.stack([fn(t) for t in range(trials)])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.stack(list(pool.map(fn, range(trials))))


def rate_sweep_trial(cfg: SystemConfig, snrs: Sequence[float], trial: int) -> np.ndarray:
    """Per-subcarrier mean rates, shape ``(len(RATE_SCHEMES), len(snrs))``, for one channel draw."""
    channel = generate_channel(cfg, trial)
    sv = channel_singular_values(channel)
    dpp = algorithm1_precode(cfg, channel)
    hp = classical_hybrid_precode(cfg, channel)
    a_dpp, a_hp = dpp.analog(), hp.analog()
    eta2 = expected_gain_squared(cfg, "approx")
    out = np.empty((len(RATE_SCHEMES), len(snrs)))
    for j, snr in enumerate(snrs):
        opt = optimal_rate(cfg, channel, snr, singular_values=sv).mean
        out[0, j] = opt
        out[1, j] = achievable_rate(cfg, channel, a_dpp, dpp.d, snr).mean
        out[2, j] = achievable_rate(cfg, channel, a_hp, hp.d, snr, scheme="classical_hp").mean
        out[3, j] = eta2 * opt
    return out


def _rate_sweep(spec: ExperimentSpec) -> ExperimentReport:
    snrs = spec.snr_db or DEFAULT_SNR_GRID
    samples = _map_trials(partial(rate_sweep_trial, spec.cfg, snrs), spec.trials, spec.workers)
    mean, err = _stats(samples)
    rows = [
        (float(snr), scheme, float(mean[i, j]), float(err[i, j]))
        for j, snr in enumerate(snrs)
        for i, scheme in enumerate(RATE_SCHEMES)
    ]
    header = _header(spec, trials=spec.trials, note=BASELINE_NOTE)
    return ExperimentReport(spec.name, header, rows)


def k_sweep_trial(cfg: SystemConfig, k_values: Sequence[int], trial: int) -> np.ndarray:
    """Optimal rate followed by the TTD-DPP rate for every ``K``, one channel draw."""
    channel = generate_channel(cfg, trial)
    out = [optimal_rate(cfg, channel).mean]
    for k in k_values:
        ck = cfg.with_(k_td=k)
        pre = algorithm1_precode(ck, channel)
        out.append(achievable_rate(ck, channel, pre.analog(), pre.d).mean)
    return np.array(out)


def _k_sweep(spec: ExperimentSpec) -> ExperimentReport:
    k_values = spec.k_values or tuple(k for k in DEFAULT_K_GRID if spec.cfg.n_t % k == 0)
    for k in k_values:
        apply_overrides(spec.cfg, {"k_td": k})
    samples = _map_trials(partial(k_sweep_trial, spec.cfg, k_values), spec.trials, spec.workers)
    mean, err = _stats(samples)
    rows = [(int(k), float(mean[i + 1]), float(err[i + 1])) for i, k in enumerate(k_values)]
    header = _header(spec, trials=spec.trials, snr_db=spec.cfg.snr_db, optimal_mean_rate=float(mean[0]))
    return ExperimentReport(spec.name, header, rows)


def energy_config(cfg: SystemConfig, n_rf: int) -> SystemConfig:
    """Scenario for ``n_rf`` RF chains: as many streams and receive antennas, and enough paths."""
    return cfg.with_(n_rf=n_rf, n_s=n_rf, n_r=n_rf, n_paths=max(cfg.n_paths, n_rf))


ENERGY_SCHEMES = ("classical_hp", "ttd_full", "ttd_dpp")


def energy_sweep_trial(cfg: SystemConfig, n_rf_values: Sequence[int], trial: int) -> np.ndarray:
    out = np.empty((len(n_rf_values), len(ENERGY_SCHEMES)))
    builders = (classical_hybrid_precode, full_ttd_precode, algorithm1_precode)
    for i, n in enumerate(n_rf_values):
        c = energy_config(cfg, n)
        channel = generate_channel(c, trial)
        for j, (scheme, build) in enumerate(zip(ENERGY_SCHEMES, builders)):
            pre = build(c, channel)
            out[i, j] = achievable_rate(c, channel, pre.analog(), pre.d, scheme=scheme).mean
    return out


def _energy_sweep(spec: ExperimentSpec) -> ExperimentReport:
    top = min(DEFAULT_MAX_RF, spec.cfg.n_t)
    n_rf_values = tuple(range(1, top + 1))
    samples = _map_trials(partial(energy_sweep_trial, spec.cfg, n_rf_values), spec.trials, spec.workers)
    mean, _ = _stats(samples)
    model = PowerModel()
    rows = []
    ee = np.empty_like(mean)
    for i, n in enumerate(n_rf_values):
        c = energy_config(spec.cfg, n)
        for j, scheme in enumerate(ENERGY_SCHEMES):
            power = power_consumption(model, scheme, c)
            ee[i, j] = energy_efficiency(float(mean[i, j]), power)
            rows.append((n, scheme, float(mean[i, j]), power, float(ee[i, j])))
    dpp_vs_hp = "yes" if np.all(ee[:, 2] > ee[:, 0]) else "no"
    dpp_vs_full = "yes" if np.all(ee[:, 2] > ee[:, 1]) else "no"
    header = _header(
        spec,
        trials=spec.trials,
        snr_db=spec.cfg.snr_db,
        ee_ttd_dpp_gt_ttd_full_all=dpp_vs_full,
        ee_ttd_dpp_gt_classical_hp_all=dpp_vs_hp,
    )
    return ExperimentReport(spec.name, header, rows)


_RUNNERS = {
    "beam-pattern": _beam_pattern,
    "gain-profile": _gain_profile,
    "bsr": _bsr,
    "rate-sweep": _rate_sweep,
    "k-sweep": _k_sweep,
    "energy-sweep": _energy_sweep,
}


def run(spec: ExperimentSpec) -> ExperimentReport:
    return _RUNNERS[spec.name](spec)


# --------------------------------------------------------------------------
# gnuplot output

_PLOT_AXES = {
    # x column, y column, group columns, x label, y label, logscale y
    "beam-pattern": (1, 4, (2, 3), "direction sin(theta)", "normalized array gain", False),
    "gain-profile": (1, 4, (2, 3), "subcarrier index m", "normalized array gain", False),
    "bsr": (4, 5, (), "bandwidth (Hz)", "beam split ratio", False),
    "rate-sweep": (1, 3, (2,), "SNR (dB)", "rate per subcarrier (bit/s/Hz)", False),
    "k-sweep": (1, 2, (), "delay elements per RF chain K", "rate per subcarrier (bit/s/Hz)", False),
    "energy-sweep": (1, 5, (2,), "RF chains", "energy efficiency (bit/s/Hz/mW)", False),
}


def gnuplot_script(report: ExperimentReport, csv_name: str) -> str:
    x, y, groups, xlabel, ylabel, logy = _PLOT_AXES[report.name]
    lines = [
        f"# {report.name}: generated by thzdpp {__version__}; needs gnuplot >= 5.4",
        'set datafile separator ","',
        "set datafile columnheaders",
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set grid",
        "set key outside right",
    ]
    if logy:
        lines.append("set logscale y")
    if not groups:
        lines.append(f"plot '{csv_name}' using {x}:{y} with linespoints notitle")
        return "\n".join(lines) + "\n"
    keys = sorted({tuple(row[g - 1] for g in groups) for row in report.rows}, key=str)
    style = "lines" if report.name == "beam-pattern" else "linespoints"
    parts = []
    for key in keys:
        cond = " && ".join(f'strcol({g}) eq "{_fmt(v)}"' for g, v in zip(groups, key))
        title = " ".join(_fmt(v) for v in key)
        parts.append(f"'{csv_name}' using {x}:(({cond}) ? ${y} : NaN) with {style} title \"{title}\"")
    lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


def write_outputs(report: ExperimentReport, out_path: Path | None, emit_plot: bool, stdout=None) -> None:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    text = report.to_csv(stamp)
    if out_path is None:
        (stdout or sys.stdout).write(text)
        return
    with open(out_path, "w", newline="") as fh:
        fh.write(text)
    if emit_plot:
        out_path.with_suffix(".gp").write_text(gnuplot_script(report, out_path.name))


# --------------------------------------------------------------------------
# command line


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thzdpp", description="Wideband THz precoding experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--preset", choices=sorted(PRESETS), help="scenario preset (bsr: restricts output to it)")
    p.add_argument("--config", type=Path, help="flat 'key = value' configuration file")
    p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Monte-Carlo trials (default %(default)s)")
    p.add_argument("--snr-db", type=_float_list, help="SNR in dB; comma list for rate-sweep, sets snr_db elsewhere")
    p.add_argument("--theta", type=float, default=DEFAULT_THETA, help="target direction sin(theta)")
    p.add_argument("--k", type=_int_list, help="delay elements per RF chain; comma list for k-sweep")
    p.add_argument("--scheme", choices=PROFILE_SCHEMES, help="beam-pattern / gain-profile: one scheme only")
    p.add_argument("--bandwidth-hz", type=_float_list, help="gain-profile: comma list of bandwidths")
    p.add_argument("--set", type=_key_value, action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration parameter")
    p.add_argument("--workers", type=int, default=1, help="worker processes for Monte-Carlo trials")
    p.add_argument("--emit-plot", action="store_true", help="also write a gnuplot script next to --out")
    return p


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    overrides: dict = dict(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.snr_db and (args.experiment != "rate-sweep" or len(args.snr_db) == 1):
        overrides["snr_db"] = args.snr_db[0]
    if args.k and (args.experiment != "k-sweep" or len(args.k) == 1):
        overrides["k_td"] = args.k[0]
    cfg = resolve_config(args.preset, args.config, overrides)
    presets = None
    if args.experiment == "bsr" and args.preset is None and args.config is None and not overrides:
        presets = ("sub6", "mmwave", "thz")
    if args.emit_plot and args.out is None:
        raise ConfigError("--emit-plot", "requires --out")
    if args.out is not None:
        _check_writable(args.out)
    return ExperimentSpec(
        name=args.experiment,
        cfg=cfg,
        trials=args.trials,
        out_path=args.out,
        emit_plot=args.emit_plot,
        theta=args.theta,
        snr_db=args.snr_db if args.experiment == "rate-sweep" else None,
        k_values=args.k if args.experiment == "k-sweep" else None,
        schemes=(args.scheme,) if args.scheme else None,
        bandwidths=args.bandwidth_hz,
        presets=presets,
        workers=args.workers,
    )


def _check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if path.is_dir():
        raise ConfigError("--out", f"{path} is a directory")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise ConfigError("--out", f"cannot write to {path}")
    if path.exists() and not os.access(path, os.W_OK):
        raise ConfigError("--out", f"cannot write to {path}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = spec_from_args(args)
    except ConfigError as exc:
        print(f"thzdpp: error: {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    try:
        report = run(spec)
        write_outputs(report, spec.out_path, spec.emit_plot)
    except Exception as exc:  # noqa: BLE001 - every failure maps to one exit code
        print(f"thzdpp: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
