"""Batch experiment runner.

Commands: ``radial-flow``, ``conformal``, ``eigen``, ``gauge-check``,
``verify``.  Configuration is a line-oriented ``key = value`` file with
``#`` comments; unknown keys and out-of-range values are rejected with
the offending line number.  Outputs are a CSV time series and a
key-value summary in the output directory.

Exit codes: 0 all checks pass, 1 check failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import conformal2d, gauge, profiles, spectral, verify
from .diagnostics import fit_decay_rate, monotonicity_check
from .errors import (
    ClosenessAbortError,
    ConfigurationError,
    HypflowError,
    NumericalError,
    PositivityLossError,
)
from .geometry import Background, BackgroundGeometry, RadialGrid
from .radial_flow import Boundary, FlowParams, evolve

__all__ = ["ExperimentConfig", "parse_config", "run", "main"]

CSV_HEADER = "t,I_L2,I_delta,I_p_delta,sup_norm,max_grad,closeness"

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

_COMMANDS = ("radial-flow", "conformal", "eigen", "gauge-check", "verify")


@dataclass
class ExperimentConfig:
    """Documented keys and their defaults; see :func:`parse_config`."""

    command: str = "radial-flow"
    n: int = 4
    background: str = "hyperbolic"
    R: float = 6.0
    m: int = 600
    cfl: float = 0.2
    t_end: float = 5.0
    record_every: int = 100
    profile: str = "bump"
    amplitude: float = 0.01
    value: float = 1.05
    boundary: str = "dirichlet"
    dt: Optional[float] = None
    delta: float = 0.0
    p: float = 2.0
    eps_abort: float = 0.5
    mode: str = "rescaled"

    def geometry(self) -> BackgroundGeometry:
        return BackgroundGeometry(Background(self.background), self.n)

    def grid(self) -> RadialGrid:
        return RadialGrid(self.R, self.m)

    def flow_params(self) -> FlowParams:
        return FlowParams(
            boundary=Boundary(self.boundary),
            cfl=self.cfl,
            t_end=self.t_end,
            record_every=self.record_every,
            eps_abort=self.eps_abort,
            dt=self.dt,
            delta=self.delta,
            p=self.p,
        )


def _parse_int(raw, lo=None, hi=None):
    value = int(raw)
    if str(value) != raw.strip():
        raise ValueError(f"not an integer: {raw!r}")
    if lo is not None and value < lo:
        raise ValueError(f"out of range (need >= {lo}): {value}")
    if hi is not None and value > hi:
        raise ValueError(f"out of range (need <= {hi}): {value}")
    return value


def _parse_float(raw, lo=None, hi=None, lo_open=False):
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"not finite: {raw!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        cmp = ">" if lo_open else ">="
        raise ValueError(f"out of range (need {cmp} {lo}): {value}")
    if hi is not None and value > hi:
        raise ValueError(f"out of range (need <= {hi}): {value}")
    return value


def _parse_enum(raw, options):
    value = raw.strip()
    if value not in options:
        raise ValueError(f"expected one of {', '.join(options)}; got {value!r}")
    return value


_PARSERS = {
    "command": lambda raw: _parse_enum(raw, _COMMANDS),
    "n": lambda raw: _parse_int(raw, lo=2),
    "background": lambda raw: _parse_enum(raw, ("hyperbolic", "euclidean")),
    "R": lambda raw: _parse_float(raw, lo=0.0, lo_open=True),
    "m": lambda raw: _parse_int(raw, lo=8),
    "cfl": lambda raw: _parse_float(raw, lo=0.0, hi=0.5, lo_open=True),
    "t_end": lambda raw: _parse_float(raw, lo=0.0),
    "record_every": lambda raw: _parse_int(raw, lo=1),
    "profile": lambda raw: _parse_enum(
        raw, ("bump", "constant", "aniso", "kinked")
    ),
    "amplitude": lambda raw: _parse_float(raw),
    "value": lambda raw: _parse_float(raw, lo=0.0, lo_open=True),
    "boundary": lambda raw: _parse_enum(
        raw, ("dirichlet", "no-boundary-constant")
    ),
    "dt": lambda raw: _parse_float(raw, lo=0.0, lo_open=True),
    "delta": lambda raw: _parse_float(raw, lo=0.0),
    "p": lambda raw: _parse_float(raw, lo=2.0),
    "eps_abort": lambda raw: _parse_float(raw, lo=0.0, hi=1.0, lo_open=True),
    "mode": lambda raw: _parse_enum(raw, ("rescaled", "unrescaled")),
}

assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the strict ``key = value`` grammar; defaults for omitted keys."""
    config = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"line {lineno}: expected 'key = value', got {line.rstrip()!r}"
            )
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _PARSERS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(config, key, _PARSERS[key](raw))
        except ValueError as err:
            raise ConfigurationError(f"line {lineno}: {key}: {err}") from None
    return config


# --------------------------------------------------------------------------
# output writers
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class _CsvWriter:
    """Single-writer CSV sink; rows flushed as they arrive."""

    def __init__(self, path: Path):
        self.fh = open(path, "w", encoding="utf-8", newline="\n")
        self.fh.write(CSV_HEADER + "\n")
        self.fh.flush()
        self.rows = 0

    def __call__(self, record):
        self.fh.write(",".join(_fmt(v) for v in record) + "\n")
        self.fh.flush()
        self.rows += 1

    def close(self):
        self.fh.close()


class _Summary:
    """Ordered key-value summary; floats get a human-scan 6-digit entry
    plus a full-precision duplicate."""

    def __init__(self):
        self.lines = []

    def put(self, key, value):
        if isinstance(value, (bool, np.bool_)):
            self.lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, float):
            self.lines.append(f"{key} = {value:.6g}")
            self.lines.append(f"{key}_full = {_fmt(value)}")
        else:
            self.lines.append(f"{key} = {value}")

    def write(self, path: Path):
        path.write_text("\n".join(self.lines) + "\n", encoding="utf-8")


def _alpha(n: int) -> float:
    return (2.0 * (n - 1) ** 2 - 17.0) / 4.0


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _initial_state(config: ExperimentConfig):
    geom, grid = config.geometry(), config.grid()
    if config.profile == "constant":
        return profiles.constant(geom, grid, config.value)
    return profiles.make_profile(
        config.profile, geom, grid, amplitude=config.amplitude
    )


def _put_common(summary: _Summary, config: ExperimentConfig, seed: int):
    summary.put("command", config.command)
    summary.put("n", config.n)
    summary.put("background", config.background)
    summary.put("R", config.R)
    summary.put("m", config.m)
    summary.put("seed", seed)


def _put_targets(summary: _Summary, n: int):
    alpha = _alpha(n)
    summary.put("alpha", alpha)
    summary.put("beta", alpha / (n + 2))
    summary.put("constant_mode_rate", 2.0 * (n - 1))
    summary.put("mckean_bound", (n - 1) ** 2 / 4.0)


def _run_radial_flow(config, out_dir, seed, summary):
    writer = _CsvWriter(out_dir / "series.csv")
    state = _initial_state(config)
    params = config.flow_params()
    try:
        result = evolve(state, params, sink=writer)
    finally:
        writer.close()
    series = result.series
    _put_targets(summary, config.n)
    passed = True
    alpha = max(_alpha(config.n), 0.0)
    if len(series) >= 2:
        mono_ok, worst = monotonicity_check(series, "I_L2", alpha, 0.05)
        summary.put("l2_monotone", mono_ok)
        summary.put("l2_worst_ratio", worst)
        passed = passed and mono_ok
    if len(series) >= 5 and series.times()[-1] > 0:
        t = series.times()
        for name in ("I_L2", "sup_norm"):
            # fit only where the decay is resolved, not the round-off
            # plateau a fast-converging run reaches long before t_end
            v = series.column(name)
            resolved = v > 1e-12 * v[0]
            if np.count_nonzero(resolved) < 5:
                continue
            window = (float(t[0]), float(t[resolved][-1]))
            try:
                fit = fit_decay_rate(series, name, window=window)
            except ConfigurationError:
                continue
            summary.put(f"{name}_rate", fit.rate)
            summary.put(f"{name}_rms_residual", fit.rms_residual)
            summary.put(f"{name}_fit_window_end", fit.window[1])
    summary.put("records", len(series))
    summary.put("t_final", float(result.state.t))
    return passed


def _run_conformal(config, out_dir, seed, summary):
    if config.n != 2:
        raise ConfigurationError("the conformal command requires n = 2")
    if config.background != "hyperbolic":
        raise ConfigurationError("the conformal command requires the "
                                 "hyperbolic background")
    grid = config.grid()
    mode = conformal2d.Mode(config.mode)
    if config.profile == "constant":
        u0 = np.full(grid.m + 1, math.log(config.value))
    else:
        base = _initial_state(config)
        u0 = np.log(base.a)
    state = conformal2d.ConformalState(grid, u0, 0.0, mode)
    params = config.flow_params()
    writer = _CsvWriter(out_dir / "series.csv")
    try:
        result = conformal2d.evolve(state, params, sink=writer)
    finally:
        writer.close()
    series = result.series
    summary.put("mode", config.mode)
    summary.put("barrier_rate", 2.0)
    passed = True
    if mode is conformal2d.Mode.RESCALED and len(series) >= 2:
        mono_ok, worst = monotonicity_check(series, "I_L2", 0.0, 1e-10)
        summary.put("l2_monotone", mono_ok)
        summary.put("l2_worst_ratio", worst)
        passed = passed and mono_ok
    summary.put("records", len(series))
    summary.put("t_final", float(result.state.t))
    return passed


def _run_eigen(config, out_dir, seed, summary):
    geom = config.geometry()
    problem = spectral.RadialEigenProblem(geom, config.R, max(config.m, 64))
    res = spectral.first_dirichlet_eigenvalue(problem)
    sigma_shoot = spectral.shooting_first_eigenvalue(geom, config.R)
    bound = (config.n - 1) ** 2 / 4.0
    summary.put("sigma1", res.extrapolated)
    summary.put("sigma1_grid", res.sigma1)
    summary.put("sigma1_error_estimate", res.error_estimate)
    summary.put("sigma1_shooting", sigma_shoot)
    summary.put("mckean_bound", bound)
    agree = abs(res.extrapolated - sigma_shoot) <= 1e-6
    summary.put("oracle_agreement", agree)
    passed = agree
    if geom.hyperbolic:
        gap = res.extrapolated - bound
        summary.put("mckean_gap", gap)
        above = res.extrapolated > bound
        summary.put("above_mckean_bound", above)
        passed = passed and above
    # the eigenvalue study has no time series; header-only CSV
    _CsvWriter(out_dir / "series.csv").close()
    return passed


def _run_gauge_check(config, out_dir, seed, summary):
    writer = _CsvWriter(out_dir / "series.csv")
    state = _initial_state(config)
    params = config.flow_params()
    try:
        result = evolve(state, params, sink=writer, keep_frames=True)
    finally:
        writer.close()
    diffeos = gauge.integrate_diffeo(result)
    for d in diffeos:
        d.check_monotone()
    summary.put("frames", len(diffeos))
    deltas = [
        float(np.max(np.abs(diffeos[k + 1].s - diffeos[k].s)))
        for k in range(len(diffeos) - 1)
    ]
    if deltas:
        summary.put("first_increment", deltas[0])
        summary.put("last_increment", deltas[-1])
        contracting = deltas[-1] <= deltas[0]
        summary.put("contracting", contracting)
    else:
        contracting = True
    summary.put("diffeo_ode_sign", gauge.DIFFEO_ODE_SIGN)
    summary.put("monotone", True)
    return contracting


def _run_verify(config, out_dir, seed, summary, quiet):
    results = verify.run_all(seed)
    passed = True
    for res in results:
        summary.put(f"suite_{res.name}", res.passed)
        summary.put(f"suite_{res.name}_value", res.value)
        if not quiet:
            print(res.line())
        passed = passed and res.passed
    summary.put("all_passed", passed)
    _CsvWriter(out_dir / "series.csv").close()
    return passed


_RUNNERS = {
    "radial-flow": _run_radial_flow,
    "conformal": _run_conformal,
    "eigen": _run_eigen,
    "gauge-check": _run_gauge_check,
}


def run(config: ExperimentConfig, out_dir, seed: int = 0, quiet: bool = False) -> int:
    """Execute one command; writes series.csv and summary.txt to out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _Summary()
    _put_common(summary, config, seed)
    start = time.perf_counter()
    try:
        if config.command == "verify":
            passed = _run_verify(config, out_dir, seed, summary, quiet)
        else:
            passed = _RUNNERS[config.command](config, out_dir, seed, summary)
        code = EXIT_OK if passed else EXIT_CHECK_FAILURE
    except ConfigurationError as err:
        if not quiet:
            print(f"configuration error: {err}", file=sys.stderr)
        summary.put("error", f"configuration: {err}")
        code = EXIT_CONFIG_ERROR
    except (PositivityLossError, ClosenessAbortError, NumericalError,
            HypflowError) as err:
        if not quiet:
            print(f"numerical failure: {err}", file=sys.stderr)
        summary.put("error", f"numerical: {err}")
        code = EXIT_NUMERICAL_FAILURE
    summary.put("exit_code", code)
    # wall-clock is reported last so determinism checks can ignore the line
    summary.lines.append(f"wall_time_s = {time.perf_counter() - start:.3f}")
    summary.write(out_dir / "summary.txt")
    if not quiet:
        print(f"wrote {out_dir / 'series.csv'} and {out_dir / 'summary.txt'}")
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hypflow",
        description="Radial Ricci-flow experiments on hyperbolic balls.",
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value configuration file")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory (default: current directory)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized suites (u64)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress output")
    args = parser.parse_args(argv)
    if not 0 <= args.seed < 2**64:
        print("seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        config = parse_config(text)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return run(config, args.out, args.seed, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
