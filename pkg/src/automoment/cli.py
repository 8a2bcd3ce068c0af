"""Command-line front end: ``automoment {verify,moment,sieve,voronoi,bessel}``.

Every command writes a table (CSV or JSON lines) whose first record is a
header echoing the artifact version, the resolved configuration and the
seed.  Settings resolve with the precedence

    command-line flag > AUTOMOMENT_<NAME> environment variable > --config file > default

where the config file holds flat ``key=value`` lines.  Exit status is 0 on
success, 1 when a suite or a tolerance check fails, and 2 for usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__, bessel, spectral, verify, voronoi
from .arith import ArithmeticDomainError, PrimeLevel, is_prime

ENV_PREFIX = "AUTOMOMENT_"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

PACKAGED_CORPORA = {"voronoi": "voronoi_corpus.json", "nsum": "nsum_corpus.json"}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text in (None, "", "none", "auto") else int(text)


def _opt_float(text):
    return None if text in (None, "", "none") else float(text)


# name -> (converter, default) per command; shared settings are merged in below
SHARED = {"format": (str, "jsonl"), "out": (str, None), "seed": (int, 0)}
OPTIONS = {
    "verify": {"q": (int, 11), "k": (int, 3), "tol": (_opt_float, None)},
    "moment": {
        "qmin": (int, 41),
        "qmax": (int, 151),
        "k": (int, 3),
        "folded": (_bool, False),
        "c_cap": (_opt_int, None),
        "timing": (_bool, False),
    },
    "sieve": {"q": (int, 13), "n": (int, 26), "h": (_opt_int, None), "k": (int, 11), "seeds": (int, 1)},
    "voronoi": {"corpus": (str, "voronoi"), "ell_cap": (int, voronoi.DEFAULT_ELL_CAP)},
    "bessel": {"grid": (str, "8:12:50"), "tol": (float, 1e-6)},
}


@dataclass
class RunConfig:
    """Resolved settings for one command."""

    command: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError as exc:
            raise AttributeError(name) from exc

    @property
    def seed(self) -> int:
        return self.values["seed"]

    def echo(self) -> dict:
        return {"command": self.command, **{k: self.values[k] for k in sorted(self.values)}}


def read_config_file(path) -> dict:
    """Parse flat ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_").lower()] = value.strip()
    return out


def resolve_config(command: str, cli_values: dict, env=None, file_values=None) -> RunConfig:
    """Merge settings for ``command`` with flag > environment > file > default precedence."""
    env = os.environ if env is None else env
    file_values = file_values or {}
    spec = {**SHARED, **OPTIONS[command]}
    unknown = sorted(set(file_values) - set(spec))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    values = {}
    for name, (conv, default) in spec.items():
        if cli_values.get(name) is not None:
            raw, source = cli_values[name], "flag"
        elif ENV_PREFIX + name.upper() in env:
            raw, source = env[ENV_PREFIX + name.upper()], "environment"
        elif name in file_values:
            raw, source = file_values[name], "config file"
        else:
            values[name] = default
            continue
        try:
            values[name] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name} from {source}: {raw!r}") from exc
    if values["format"] not in ("csv", "jsonl"):
        raise ConfigError(f"format must be csv or jsonl, got {values['format']!r}")
    return RunConfig(command, values)


# --------------------------------------------------------------------------
# output


class TableWriter:
    """Buffered writer for one header record, data rows and optional trailer."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.rows: list[dict] = []
        self.trailer: dict | None = None

    def header(self) -> dict:
        return {"record": "header", "version": __version__, "config": self.config.echo(), "seed": self.config.seed}

    def render(self) -> str:
        if self.config.format == "jsonl":
            lines = [json.dumps(self.header())]
            lines += [json.dumps(r) for r in self.rows]
            if self.trailer is not None:
                lines.append(json.dumps(self.trailer))
            return "\n".join(lines) + "\n"
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header()) + "\n")
        if self.rows:
            cols = list(self.rows[0])
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(cols)
            for r in self.rows:
                writer.writerow([_csv_cell(r.get(c)) for c in cols])
        if self.trailer is not None:
            buf.write("# " + json.dumps(self.trailer) + "\n")
        return buf.getvalue()

    def write(self):
        text = self.render()
        if self.config.out:
            with open(self.config.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return v


def _clean(v):
    """JSON-safe plain Python value."""
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _require_level(q: int, k: int) -> PrimeLevel:
    if not is_prime(q) or q < 5:
        raise ConfigError(f"q={q} is not allowed: the level must be a prime >= 5")
    try:
        return PrimeLevel(q, k)
    except ArithmeticDomainError as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------------------
# commands


def run_verify(config: RunConfig, writer: TableWriter) -> int:
    _require_level(config.q, config.k)
    if config.tol is not None and not config.tol >= 0:
        raise ConfigError("tolerance override must be non-negative")
    results = verify.run_suites(config.q, config.k, config.seed, config.tol)
    writer.rows = [{k: _clean(v) for k, v in r.as_dict().items()} for r in results]
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def run_moment(config: RunConfig, writer: TableWriter) -> int:
    qs = spectral.primes_between(config.qmin, config.qmax)
    if not qs:
        raise ConfigError(f"no primes in [{config.qmin}, {config.qmax}]")
    if config.k < 2:
        raise ConfigError("weight k must be >= 2")
    rows = []
    for q in qs:
        start = time.perf_counter()
        (row,) = spectral.moment_trend(
            [q], c_cap=config.c_cap, folded=config.folded, seed=config.seed, prefactors=False, k=config.k
        )
        elapsed = (time.perf_counter() - start) * 1e3
        rows.append(
            {
                "q": row["q"],
                "k": row["k"],
                "seed": row["seed"],
                "X": row["X"],
                "Y": row["Y"],
                "c_cap": row["c_cap"],
                "value": _clean(row["value"]),
                "tail": _clean(row["tail"]),
                "status": row["status"],
                "runtime_ms": round(elapsed, 3) if config.timing else None,
            }
        )
    writer.rows = rows
    ok = [r for r in rows if r["value"] is not None]
    slope = spectral.loglog_slope([r["q"] for r in ok], [r["value"] for r in ok]) if ok else float("nan")
    writer.trailer = {
        "record": "summary",
        "rows": len(rows),
        "failed": len(rows) - len(ok),
        "loglog_slope": _clean(slope),
    }
    return EXIT_OK if len(ok) == len(rows) else EXIT_FAILURE


def run_sieve(config: RunConfig, writer: TableWriter) -> int:
    level = _require_level(config.q, config.k)
    N = config.n
    if N < config.q:
        raise ConfigError(f"N={N} must be at least q={config.q}")
    T = N / config.q
    H = int(math.floor(T)) if config.h is None else config.h
    if not 1 <= H <= T:
        raise ConfigError(f"h={H} must lie in [1, N/q] = [1, {T:g}]")
    if config.seeds < 1:
        raise ConfigError("seeds must be >= 1")
    status = EXIT_OK
    for s in range(config.seed, config.seed + config.seeds):
        lhs, rhs, residual, envelope = spectral.large_sieve_sides(spectral.random_alpha(N, s), level, H)
        writer.rows.append(
            {"lhs": _clean(lhs), "rhs_main": _clean(rhs), "residual": _clean(residual), "envelope": _clean(envelope)}
        )
        if abs(residual) > 100 * envelope:
            status = EXIT_FAILURE
    return status


def _load_corpus(name: str):
    if name in PACKAGED_CORPORA:
        with resources.files("automoment.data").joinpath(PACKAGED_CORPORA[name]).open() as fh:
            return json.load(fh)
    if not os.path.exists(name):
        raise ConfigError(f"corpus {name!r} is neither a packaged corpus ({', '.join(PACKAGED_CORPORA)}) nor a file")
    try:
        return voronoi.load_corpus(name)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read corpus {name}: {exc}") from exc


def run_voronoi(config: RunConfig, writer: TableWriter) -> int:
    records = _load_corpus(config.corpus)
    try:
        rows = voronoi.run_corpus(records, ell_cap=config.ell_cap)
    except (KeyError, ArithmeticDomainError) as exc:
        raise ConfigError(f"invalid corpus record: {exc}") from exc
    writer.rows = [{k: _clean(v) for k, v in r.items()} for r in rows]
    return EXIT_OK if all(r["ok"] for r in rows) else EXIT_FAILURE


def parse_grid(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigError(f"grid must look like lo:hi:n, got {text!r}") from exc
    if not (0 < lo < hi) or n < 2:
        raise ConfigError(f"grid needs 0 < lo < hi and n >= 2, got {text!r}")
    return np.geomspace(lo, hi, n)


def run_bessel(config: RunConfig, writer: TableWriter) -> int:
    xs = parse_grid(config.grid)
    ys, ya = bessel.y0_series(xs), bessel.y0_asymptotic(xs)
    ks, ka = bessel.k0_series(xs), bessel.k0_asymptotic(xs)
    delta = np.maximum(np.abs(ys - ya), np.abs(ks - ka))
    writer.rows = [
        {
            "x": float(x),
            "y0_series": float(a),
            "y0_asymptotic": float(b),
            "k0_series": float(c),
            "k0_asymptotic": float(d),
            "max_abs_delta": float(e),
        }
        for x, a, b, c, d, e in zip(xs, ys, ya, ks, ka, delta)
    ]
    return EXIT_OK if float(np.max(delta)) <= config.tol else EXIT_FAILURE


COMMANDS = {
    "verify": run_verify,
    "moment": run_moment,
    "sieve": run_sieve,
    "voronoi": run_voronoi,
    "bessel": run_bessel,
}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--format", choices=["csv", "jsonl"], default=None)
    shared.add_argument("--out", default=None, help="output path (stdout when omitted)")
    shared.add_argument("--config", default=None, help="flat key=value settings file")
    shared.add_argument("--seed", type=int, default=None)

    parser = _Parser(prog="automoment", description="Numerical checks for fourth moments at prime level.")
    parser.add_argument("--version", action="version", version=f"automoment {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[shared], help="run every invariant suite")
    p.add_argument("--q", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--tol", type=float, help="override every suite tolerance")

    p = sub.add_parser("moment", parents=[shared], help="mean-square trend over a prime range")
    p.add_argument("--qmin", type=int)
    p.add_argument("--qmax", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--c-cap", dest="c_cap", type=int)
    p.add_argument("--folded", action="store_const", const=True, default=None)
    p.add_argument("--timing", action="store_const", const=True, default=None, help="record runtime_ms (breaks byte-identity)")

    p = sub.add_parser("sieve", parents=[shared], help="asymptotic large sieve sides for random coefficients")
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int, help="coefficients live on N < n <= 2N")
    p.add_argument("--h", type=int, help="cut in h (default floor(N/q))")
    p.add_argument("--k", type=int)
    p.add_argument("--seeds", type=int, help="number of consecutive seeds")

    p = sub.add_parser("voronoi", parents=[shared], help="evaluate a Voronoi or n2-sum corpus")
    p.add_argument("--corpus", help="path, or a packaged corpus name: voronoi, nsum")
    p.add_argument("--ell-cap", dest="ell_cap", type=int)

    p = sub.add_parser("bessel", parents=[shared], help="Y0/K0 series vs asymptotic cross-check grid")
    p.add_argument("--grid", help="lo:hi:n, log-spaced (default 8:12:50)")
    p.add_argument("--tol", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cli_values = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else None
        config = resolve_config(args.command, cli_values, file_values=file_values)
        writer = TableWriter(config)
        status = COMMANDS[args.command](config, writer)
        writer.write()
    except ConfigError as exc:
        print(f"automoment {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"automoment {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
