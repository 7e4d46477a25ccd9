"""Command-line front end: ``dyadic simulate|constant|selfsimilar|sweep|verify``.

Configuration comes from an optional flat ``key = value`` file (``#`` starts a
comment) and from flags; flags win. Exit status is 0 on success, 1 when a
computation fails and 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import enum
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .core import (CoefficientSequence, ModelParams, RegimeTag, SelfSimilarBand, SequenceKind,
                   ShellField, k41_normalize, regime_classify, selfsimilar_band)
from .errors import DyadicError, InvalidParametersError
from .odesim import TailClosure, detect_blowup, integrate, trajectory_manifest
from .selfsimilar import (build_selfsimilar, find_L_star, selfsimilar_csv_rows,
                          selfsimilar_sequence, shoot_selfsimilar, strong_from_weak)
from .stationary import build_constant_solution, constant_csv_rows, find_unique_constant
from .verify import format_table, run_checks

__all__ = ["Command", "OutputFormat", "RunConfig", "SweepRecord", "ConfigError",
           "parse_config", "run", "sweep", "sweep_cell", "main"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    """Invalid configuration (exit status 2)."""


class Command(str, enum.Enum):
    SIMULATE = "simulate"
    CONSTANT = "constant"
    SELFSIMILAR = "selfsimilar"
    SWEEP = "sweep"
    VERIFY = "verify"


class OutputFormat(str, enum.Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class GridSpec:
    d1: tuple[float, float, int]
    d2: tuple[float, float, int]

    def axes(self):
        return (np.geomspace(self.d1[0], self.d1[1], self.d1[2]),
                np.geomspace(self.d2[0], self.d2[1], self.d2[2]))


def parse_grid(text: str) -> GridSpec:
    """Parse ``d1lo:d1hi:n,d2lo:d2hi:n`` (log-spaced axes)."""
    try:
        parts = [p.split(":") for p in text.split(",")]
        if len(parts) != 2 or any(len(p) != 3 for p in parts):
            raise ValueError
        axes = [(float(lo), float(hi), int(n)) for lo, hi, n in parts]
    except ValueError:
        raise ConfigError(f"grid: expected d1lo:d1hi:n,d2lo:d2hi:n, got {text!r}") from None
    for name, (lo, hi, n) in zip(("delta1", "delta2"), axes):
        if not (0 < lo <= hi and math.isfinite(hi)):
            raise ConfigError(f"grid: {name} bounds must be positive with lo <= hi")
        if n < 2:
            raise ConfigError(f"grid: {name} needs at least 2 points")
    return GridSpec(*axes)


# key -> (type, default, commands allowed, or None for all)
_KEYS = {
    "beta": (float, 1.0, None),
    "delta1": (float, 1.0, None),
    "delta2": (float, 1.0, None),
    "forcing": (float, 0.0, None),
    "shells": (int, 40, None),
    "out": (str, None, None),
    "format": (str, "csv", None),
    "t_end": (float, 1.0, {Command.SIMULATE}),
    "rel_tol": (float, 1e-10, {Command.SIMULATE}),
    "abs_tol": (float, 1e-12, {Command.SIMULATE}),
    "samples": (int, 101, {Command.SIMULATE}),
    "initial": (str, "geometric", {Command.SIMULATE}),
    "seed": (int, 0, {Command.SIMULATE}),
    "a0": (float, None, {Command.CONSTANT}),
    "a1": (float, None, {Command.SELFSIMILAR}),
    "grid": (str, "0.01:2:20,0.01:2:20", {Command.SWEEP}),
    "workers": (int, 1, {Command.SWEEP}),
    "blowup_t_end": (float, 0.0, {Command.SWEEP}),
}
_INITIAL = ("geometric", "random", "constant", "selfsimilar")


@dataclass(frozen=True)
class RunConfig:
    command: Command
    params: ModelParams
    output_path: Path | None
    format: OutputFormat
    options: dict = field(default_factory=dict)


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into raw strings."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    out = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"{p}:{lineno}: unknown key '{key}'")
        if key in out:
            raise ConfigError(f"{p}:{lineno}: duplicate key '{key}'")
        out[key] = (value, f"{p}:{lineno}")
    return out


def _convert(key: str, value, where: str):
    typ = _KEYS[key][0]
    try:
        if typ is int:
            v = float(value)
            if v != int(v):
                raise ValueError
            return int(v)
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: '{key}' expects {typ.__name__}, got {value!r}") from None


def parse_config(command: str, flags: dict | None = None, path=None) -> RunConfig:
    """Merge defaults, an optional config file and flags into a :class:`RunConfig`.

    Parameters
    ----------
    command : str
        One of the command names.
    flags : dict
        Flag values by key; ``None`` entries are treated as not given.
    path : path-like, optional
        Config file.

    Raises
    ------
    ConfigError
        Unknown keys, bad values, or options that do not belong to the command.
    """
    try:
        cmd = Command(command)
    except ValueError:
        raise ConfigError(f"unknown command {command!r}") from None
    values = {k: spec[1] for k, spec in _KEYS.items()}
    if path is not None:
        for key, (raw, where) in read_config_file(path).items():
            values[key] = _convert(key, raw, where)
    for key, v in (flags or {}).items():
        if v is None:
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown option '{key}'")
        allowed = _KEYS[key][2]
        if allowed is not None and cmd not in allowed:
            raise ConfigError(f"option --{key.replace('_', '-')} does not apply to '{cmd.value}'")
        values[key] = _convert(key, v, "flag")

    try:
        params = ModelParams(beta=values["beta"], delta1=values["delta1"], delta2=values["delta2"],
                             forcing=values["forcing"], n_shells=values["shells"])
    except InvalidParametersError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None
    try:
        fmt = OutputFormat(str(values["format"]).lower())
    except ValueError:
        raise ConfigError(f"format must be csv or json, got {values['format']!r}") from None
    for key in ("t_end", "rel_tol", "abs_tol"):
        if not values[key] > 0:
            raise ConfigError(f"'{key}' must be positive")
    for key in ("rel_tol", "abs_tol"):
        if not values[key] < 1:
            raise ConfigError(f"'{key}' must be below 1")
    if values["samples"] < 2:
        raise ConfigError("'samples' must be at least 2")
    if values["initial"] not in _INITIAL:
        raise ConfigError(f"'initial' must be one of {', '.join(_INITIAL)}")
    if values["workers"] < 1:
        raise ConfigError("'workers' must be at least 1")
    for key in ("a0", "a1"):
        if values[key] is not None and not values[key] > 0:
            raise ConfigError(f"'{key}' must be positive")
    opts = {k: values[k] for k in _KEYS if k not in
            ("beta", "delta1", "delta2", "forcing", "shells", "out", "format")}
    if cmd is Command.SWEEP:
        opts["grid"] = parse_grid(values["grid"])
    out = Path(values["out"]) if values["out"] else None
    return RunConfig(cmd, params, out, fmt, opts)


def _emit(cfg: RunConfig, header, rows, results: dict, stats: dict) -> None:
    """Write data and manifest, or print data to stdout when no path is set."""
    man = io.manifest(cfg.command.value, cfg.params, results, stats)
    if cfg.format is OutputFormat.JSON:
        man["columns"] = list(header)
        man["rows"] = [list(r) for r in rows]
        text = io.dumps(man)
        if cfg.output_path is None:
            sys.stdout.write(text)
        else:
            io.write_text(cfg.output_path, text)
        return
    text = io.csv_text(header, rows)
    if cfg.output_path is None:
        sys.stdout.write(text)
        return
    io.write_text(cfg.output_path, text)
    io.write_text(cfg.output_path.with_suffix(".manifest.json"), io.dumps(man))


def _constant_seq(params: ModelParams, a0: float | None = None, depth: int | None = None):
    tag = regime_classify(params).tag
    if tag in (RegimeTag.OBUKHOV_DOMINANT, RegimeTag.PURE_OBUKHOV):
        if a0 is None:
            a0 = math.sqrt(params.forcing / (params.delta1 + params.delta2))
        return build_constant_solution(a0, params)
    return find_unique_constant(params, depth=min(depth or params.n_shells, 60))


def _run_constant(cfg: RunConfig) -> int:
    p = cfg.params
    a0 = cfg.options.get("a0")
    tag = regime_classify(p).tag
    if a0 is not None and tag not in (RegimeTag.OBUKHOV_DOMINANT, RegimeTag.PURE_OBUKHOV):
        raise DyadicError(f"--a0 only applies in the Obukhov-dominant regime (regime {tag.value})")
    seq = _constant_seq(p, a0)
    rows = constant_csv_rows(seq)
    results = {"regime": tag.value, "k41_constant": seq.k41_constant, "shells": len(seq),
               "a0": float(seq.values[0])}
    _emit(cfg, ["n", "k_n", "a_n", "a_tilde_n"], rows, results, dict(seq.meta))
    return EXIT_OK


def _selfsimilar_seq(params: ModelParams, a1: float | None = None):
    seq = _selfsimilar_full(params, a1)
    if len(seq) > params.n_shells + 1:
        seq = replace(seq, values=seq.values[:params.n_shells + 1])
    return seq


def _selfsimilar_full(params: ModelParams, a1: float | None):
    # pull-back and shooting are only accurate at full depth; callers truncate
    band = selfsimilar_band(params)
    if params.delta2 == 0:
        if params.beta != 1.0:
            raise DyadicError("pure-KP pull-back is implemented for beta = 1 only")
        L, w = find_L_star(min(max(params.n_shells, 60), 200), 1e-12)
        a = strong_from_weak(w)
        a[0] = 0.0
        c = k41_normalize(a, 1.0)
        return CoefficientSequence(a, SequenceKind.SELF_SIMILAR, params, k41_constant=float(c[-1]),
                                   t_origin=-1.0, meta={"method": "pull-back", "L_star": L})
    if band is SelfSimilarBand.MULTIPLE:
        return build_selfsimilar(a1 if a1 is not None else 1.0, params, depth=params.n_shells)
    if a1 is not None:
        raise DyadicError(f"--a1 only applies in the multi-solution band (band {band.value})")
    if band in (SelfSimilarBand.UNIQUE, SelfSimilarBand.ABOVE):
        return shoot_selfsimilar(params).sequence
    raise DyadicError(f"no self-similar construction for band {band.value}")


def _run_selfsimilar(cfg: RunConfig) -> int:
    seq = _selfsimilar_seq(cfg.params, cfg.options.get("a1"))
    rows = selfsimilar_csv_rows(seq)
    results = {"band": selfsimilar_band(cfg.params).value,
               "regime": regime_classify(cfg.params).tag.value,
               "k41_constant": seq.k41_constant, "a1": float(seq.values[1]), "shells": len(seq)}
    _emit(cfg, ["n", "a_n", "a_tilde_n", "b_tilde_n", "eps_n"], rows, results, dict(seq.meta))
    return EXIT_OK


def _initial_field(cfg: RunConfig):
    p = cfg.params
    N = p.n_shells
    kind = cfg.options["initial"]
    n = np.arange(N + 1)
    if kind == "geometric":
        return ShellField(2.0 ** (-n)), TailClosure.zero()
    if kind == "random":
        rng = np.random.default_rng(cfg.options["seed"])
        return ShellField(rng.uniform(0.5, 1.5, N + 1) * 2.0 ** (-p.beta * n / 3)), TailClosure.zero()
    if kind == "constant":
        seq = _constant_seq(p, depth=N + 1)
        if len(seq) < N + 2:
            raise DyadicError(f"constant solution trusted for {len(seq)} shells, need {N + 2}")
        return ShellField(seq.values[:N + 1]), TailClosure.constant(seq.values[N + 1])
    big = p.replace(n_shells=max(N + 1, p.n_shells))
    seq = _selfsimilar_seq(big)
    a = seq.values
    if a.size < N + 2:
        raise DyadicError(f"self-similar sequence trusted for {a.size} shells, need {N + 2}")
    t0 = -1.0
    return ShellField(a[:N + 1] / (0.0 - t0)), TailClosure.self_similar(a[N + 1], t0)


def _run_simulate(cfg: RunConfig) -> int:
    o = cfg.options
    y0, tail = _initial_field(cfg)
    tr = integrate(y0, cfg.params, o["t_end"], o["rel_tol"], o["abs_tol"],
                   n_samples=o["samples"], tail=tail)
    rep = detect_blowup(tr, 1.0, 1e6)
    e = tr.energies()
    results = {"initial": o["initial"], "energy_start": float(e[0]), "energy_end": float(e[-1]),
               "blowup": rep.as_dict(), "t_reached": float(tr.times[-1])}
    stats = trajectory_manifest(tr)
    header = ["t"] + [f"Y_{i}" for i in range(cfg.params.n_shells + 1)]
    rows = [[t] + list(v) for t, v in zip(tr.times, tr.values)]
    _emit(cfg, header, rows, results, stats)
    return EXIT_FAIL if tr.integrator_stats.reason == "non_finite" else EXIT_OK


@dataclass(frozen=True)
class SweepRecord:
    delta1: float
    delta2: float
    ratio: float
    regime: str
    band: str
    constant_found: bool
    selfsimilar_found: bool
    k41_constant: float | None
    shoot_root: float | None
    blowup_time: float | None

    FIELDS = ("delta1", "delta2", "ratio", "regime", "band", "constant_found",
              "selfsimilar_found", "k41_constant", "shoot_root", "blowup_time")

    def row(self):
        return [getattr(self, f) for f in self.FIELDS]


def sweep_cell(d1: float, d2: float, base: ModelParams, blowup_t_end: float = 0.0) -> SweepRecord:
    """Evaluate one parameter cell; never raises for computational failures."""
    forcing = base.forcing if base.forcing > 0 else 1.0
    p = base.replace(delta1=float(d1), delta2=float(d2), forcing=forcing,
                     n_shells=min(base.n_shells, 60))
    rc = regime_classify(p)
    band = selfsimilar_band(p)
    constant_found, k41 = False, None
    try:
        seq = _constant_seq(p, depth=60)
        constant_found, k41 = True, seq.k41_constant
    except DyadicError:
        pass
    ss_found, root = False, None
    try:
        if band in (SelfSimilarBand.UNIQUE, SelfSimilarBand.ABOVE):
            r = shoot_selfsimilar(p, depth=60, scan=(1e-4 / (d1 + d2), 1e4 / (d1 + d2), 81))
            root = r.root
            ss_found = r.meta["k41_drift"] < 1e-4
        elif band in (SelfSimilarBand.MULTIPLE, SelfSimilarBand.BELOW):
            s = build_selfsimilar(1.0, p, depth=200, allow_outside_band=True)
            ss_found = s.meta["k41_drift"] < 1e-4
    except DyadicError:
        pass
    blow = None
    if blowup_t_end > 0:
        q = p.replace(forcing=0.0, n_shells=16)
        tr = integrate(ShellField(2.0 ** (-np.arange(17))), q, blowup_t_end, 1e-8, 1e-12,
                       n_samples=201)
        rep = detect_blowup(tr, 1.0, 1e6)
        blow = rep.t_estimate if rep.detected else None
    return SweepRecord(float(d1), float(d2), rc.ratio, rc.tag.value, band.value,
                       constant_found, ss_found, k41, root, blow)


def _cell(args):
    return sweep_cell(*args)


def sweep(base: ModelParams, grid: GridSpec, workers: int = 1,
          blowup_t_end: float = 0.0) -> list[SweepRecord]:
    """Evaluate every grid cell, sorted by ``(delta1, delta2)``."""
    d1s, d2s = grid.axes()
    tasks = [(d1, d2, base, blowup_t_end) for d1 in d1s for d2 in d2s]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(_cell, tasks, chunksize=8))
    else:
        recs = [_cell(t) for t in tasks]
    return sorted(recs, key=lambda r: (r.delta1, r.delta2))


def _run_sweep(cfg: RunConfig) -> int:
    o = cfg.options
    recs = sweep(cfg.params, o["grid"], o["workers"], o["blowup_t_end"])
    g = o["grid"]
    results = {"cells": len(recs), "grid": {"delta1": list(g.d1), "delta2": list(g.d2),
                                            "spacing": "log"},
               "constant_found": sum(r.constant_found for r in recs),
               "selfsimilar_found": sum(r.selfsimilar_found for r in recs)}
    _emit(cfg, SweepRecord.FIELDS, [r.row() for r in recs], results, {"workers": o["workers"]})
    return EXIT_OK


def _run_verify(cfg: RunConfig) -> int:
    res = run_checks(cfg.params)
    print(format_table(res))
    if cfg.output_path is not None:
        man = io.manifest("verify", cfg.params, {"checks": [asdict(r) for r in res]}, {})
        io.write_text(cfg.output_path, io.dumps(man))
    return EXIT_OK if all(r.passed for r in res) else EXIT_FAIL


_RUNNERS = {Command.SIMULATE: _run_simulate, Command.CONSTANT: _run_constant,
            Command.SELFSIMILAR: _run_selfsimilar, Command.SWEEP: _run_sweep,
            Command.VERIFY: _run_verify}


def run(config: RunConfig) -> int:
    """Execute a configuration and return the exit status."""
    try:
        return _RUNNERS[config.command](config)
    except DyadicError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dyadic", description="Mixed KP/Obukhov dyadic shell model toolkit.")
    ap.add_argument("command", choices=[c.value for c in Command])
    ap.add_argument("--config", metavar="PATH", help="flat key = value config file")
    g = ap.add_argument_group("model")
    g.add_argument("--beta", help="wavenumber exponent (default 1)")
    g.add_argument("--delta1", help="KP weight (default 1)")
    g.add_argument("--delta2", help="Obukhov weight (default 1)")
    g.add_argument("--forcing", help="shell-0 forcing F (default 0)")
    g.add_argument("--shells", help="last shell index N (default 40)")
    o = ap.add_argument_group("output")
    o.add_argument("--out", metavar="PATH", help="output file; stdout when omitted")
    o.add_argument("--format", help="csv or json (default csv)")
    s = ap.add_argument_group("simulate")
    s.add_argument("--t-end", help="final time (default 1)")
    s.add_argument("--rel-tol", help="relative tolerance (default 1e-10)")
    s.add_argument("--abs-tol", help="absolute tolerance (default 1e-12)")
    s.add_argument("--samples", help="number of output samples (default 101)")
    s.add_argument("--initial", help="geometric, random, constant or selfsimilar")
    s.add_argument("--seed", help="seed for random initial data (default 0)")
    c = ap.add_argument_group("constructions")
    c.add_argument("--a0", help="a_0 seed for Obukhov-dominant constant solutions")
    c.add_argument("--a1", help="a_1 seed in the multi-solution self-similar band")
    w = ap.add_argument_group("sweep")
    w.add_argument("--grid", help="d1lo:d1hi:n,d2lo:d2hi:n, log-spaced (default 0.01:2:20,0.01:2:20)")
    w.add_argument("--workers", help="parallel worker processes (default 1)")
    w.add_argument("--blowup-t-end", help="probe blow-up up to this time per cell (default off)")
    return ap


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
        cfg = parse_config(ns.command, flags, ns.config)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
