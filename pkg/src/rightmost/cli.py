"""Command-line driver: one reproducible subcommand per experiment.

Every output starts with a provenance header holding the full run
configuration; CSV files carry it as a ``#``-prefixed JSON line.

Exit codes: 0 success, 2 configuration error, 3 numerical guard tripped,
4 no data.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__, simulate
from .estimators import InsufficientDataError, wilson_ci
from .lattice import ContractError, SimParams, WindowOverflowError
from .qsd import (
    NonConvergenceError,
    TruncatedStateSpace,
    build_kernel,
    conditional_law_mc,
    convergence_experiment,
    yaglom,
)
from .renewal import survival_counts, tail_statistics
from .view import DepthError, InitialCondition

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_NODATA = 0, 2, 3, 4
COMMANDS = ("survival", "qsd-exact", "qsd-mc", "converge", "renewal")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    p: float
    n: int | None
    n_list: list[int] | None
    trials: int
    seed: int
    window_width: int
    r: int
    initial: str
    w: int
    mode: str
    threads: int | None
    out: str | None
    format: str

    def validate(self):
        if self.subcommand not in COMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("--p must lie in [0, 1]")
        if self.trials < 1:
            raise ConfigError("--trials must be positive")
        if self.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        if self.r < 1:
            raise ConfigError("--r must be positive")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("--threads must be positive")
        try:
            init = InitialCondition.parse(self.initial)
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc
        cmd = self.subcommand
        if cmd in ("survival", "qsd-mc", "renewal") and (self.n is None or self.n < 1):
            raise ConfigError(f"{cmd} needs --n >= 1")
        if cmd == "converge" and not self.n_list:
            raise ConfigError("converge needs --n-list")
        if cmd == "survival" and not init.is_finite:
            raise ConfigError("survival needs a finite --initial (origin or finite:...)")
        if cmd == "renewal" and init.kind != "full":
            raise ConfigError("renewal needs --initial full")
        if cmd == "qsd-mc" and init.kind != "origin":
            raise ConfigError("qsd-mc conditions the chain started from the origin")
        if cmd in ("qsd-exact", "converge"):
            if not 1 <= self.w <= 12:
                raise ConfigError("--w must lie in [1, 12]")
            if self.mode not in ("project", "kill"):
                raise ConfigError("--mode must be project or kill")
        if cmd == "converge" and self.r >= self.w:
            raise ConfigError(f"--r {self.r} must be smaller than --w {self.w}")
        return init

    def header(self) -> dict:
        return {"artifact": "rightmost", "version": __version__, "config": asdict(self)}

    def params(self, n: int) -> SimParams:
        try:
            return SimParams(self.p, max(n, 1), self.window_width, self.seed)
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc


def _csv_text(header: dict, rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in columns})
    return buf.getvalue()


def _json_text(header: dict, body: dict) -> str:
    return json.dumps({"header": header, **body}, indent=2, sort_keys=True) + "\n"


def _emit(cfg: RunConfig, rows, columns, extra: dict | None = None) -> str:
    header = cfg.header()
    if cfg.format == "json":
        body = {"rows": rows}
        if extra is not None:
            body["summary"] = extra
        return _json_text(header, body)
    text = _csv_text(header, rows, columns)
    if extra is not None:
        if cfg.out:
            summary = Path(cfg.out).with_suffix(".summary.json")
            summary.write_text(_json_text(header, {"summary": extra}))
        else:
            text += "# summary " + json.dumps(extra, sort_keys=True) + "\n"
    return text


def cmd_survival(cfg: RunConfig, init: InitialCondition) -> str:
    params = cfg.params(cfg.n)
    alive = survival_counts(params, init, cfg.trials)
    rows = []
    for n in range(1, cfg.n + 1):
        lo, hi = wilson_ci(int(alive[n]), cfg.trials)
        rows.append({"n": n, "survivors": int(alive[n]), "p_hat": alive[n] / cfg.trials,
                     "ci_low": lo, "ci_high": hi})
    return _emit(cfg, rows, ["n", "survivors", "p_hat", "ci_low", "ci_high"])


def cmd_qsd_exact(cfg: RunConfig, init: InitialCondition) -> str:
    kernel = build_kernel(cfg.p, TruncatedStateSpace(cfg.w, cfg.mode))
    res = yaglom(kernel)
    return _json_text(cfg.header(), res.to_json(kernel))


def cmd_qsd_mc(cfg: RunConfig, init: InitialCondition) -> str:
    law = conditional_law_mc(cfg.params(cfg.n), cfg.n, cfg.trials, cfg.r)
    if not law.has_data:
        raise InsufficientDataError(f"no trial survived past n={cfg.n}")
    return _emit(cfg, law.rows(),
                 ["pattern", "count", "prob", "ci_low", "ci_high", "survivors", "trials"])


def cmd_converge(cfg: RunConfig, init: InitialCondition) -> str:
    oracle = yaglom(build_kernel(cfg.p, TruncatedStateSpace(cfg.w, cfg.mode))).nu
    res = convergence_experiment(cfg.params(max(cfg.n_list)), init, cfg.n_list, cfg.r,
                                 cfg.trials, oracle)
    rows = [{"n": row.n, "tv": row.tv, "ci": row.ci, "survivors_or_trials": row.count}
            for row in res.rows]
    return _emit(cfg, rows, ["n", "tv", "ci", "survivors_or_trials"])


def cmd_renewal(cfg: RunConfig, init: InitialCondition) -> str:
    report = tail_statistics(cfg.params(cfg.n), init, cfg.n, cfg.trials)
    return _emit(cfg, report.rows(),
                 ["m", "count_I_ge_m", "p_I_ge_m", "count_YI_ge_m2", "p_YI_ge_m2"],
                 extra=report.summary())


HANDLERS = {
    "survival": cmd_survival,
    "qsd-exact": cmd_qsd_exact,
    "qsd-mc": cmd_qsd_mc,
    "converge": cmd_converge,
    "renewal": cmd_renewal,
}


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, required=True, help="bond-open probability")
    common.add_argument("--n", type=int, default=None, help="horizon level")
    common.add_argument("--n-list", type=_int_list, default=None, help="comma-separated levels")
    common.add_argument("--trials", type=int, default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--window", type=int, default=128, dest="window_width",
                        help="tracked sites per level")
    common.add_argument("--r", type=int, default=3, help="cylinder radius")
    common.add_argument("--initial", default="origin", help="origin | full | finite:0,-2,...")
    common.add_argument("--w", type=int, default=10, help="oracle truncation width")
    common.add_argument("--mode", default="project", choices=["project", "kill"])
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $RIGHTMOST_THREADS or all)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", default="csv", choices=["csv", "json"])

    parser = argparse.ArgumentParser(prog="rightmost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    cfg = RunConfig(**args)
    try:
        init = cfg.validate()
        simulate.set_threads(cfg.threads)
        text = HANDLERS[cfg.subcommand](cfg, init)
    except (ConfigError, ContractError) as exc:
        print(f"rightmost: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, WindowOverflowError, DepthError) as exc:
        print(f"rightmost: numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except InsufficientDataError as exc:
        print(f"rightmost: no data: {exc}", file=sys.stderr)
        return EXIT_NODATA
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
