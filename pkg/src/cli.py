"""
Command-line front door.

    python -m src.cli <orlicz|carleson|nevanlinna|decomp|criteria|separation> [flags]

Exit codes: 0 success, 1 invalid arguments, 2 inconclusive experiment,
3 numeric or file failure.
"""

import argparse
import csv
import logging
import math
import os
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, ValidationError

from src.criteria import Verdict, bergman_compactness_ratio, hardy_compactness_ratio, separation_experiment
from src.disk_geometry import WindowKind, pullback_area, pullback_boundary, rho_curve, sample_disk
from src.harmonic_tools import DecompositionThresholdError, cz_decompose, parse_test_function
from src.log_real import MP, CarlesonLabError
from src.nevanlinna import counting_sums, equivalence_report
from src.orlicz_core import (
    OrliczFunction,
    OrliczParameterError,
    ProbeCondition,
    SpecialPiecewise,
    build_special,
    condition_probe,
    parse_psi,
)
from src.symbols import AnalyticSymbol, CuspConstructionError, SymbolError, parse_symbol

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2
EXIT_FAILURE = 3


# --- Exceptions ---

class UsageError(Exception):
    """Raised for invalid arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- Models ---

class Command(str, Enum):
    ORLICZ = "orlicz"
    CARLESON = "carleson"
    NEVANLINNA = "nevanlinna"
    DECOMP = "decomp"
    CRITERIA = "criteria"
    SEPARATION = "separation"


class RunConfig(BaseModel):
    """Parsed run parameters. ``render`` gives back an equivalent argv."""

    model_config = ConfigDict(frozen=True)

    command: Command
    symbol: Optional[str] = None
    psi: Optional[str] = None
    h: Optional[str] = None
    samples: Optional[int] = None
    n_theta: Optional[int] = None
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    space: Optional[str] = None
    kind: Optional[str] = None
    atoms_out: Optional[str] = None
    special: bool = False
    c1: Optional[float] = None
    c2: Optional[float] = None
    depth: Optional[int] = None
    dump: bool = False
    probe: Optional[str] = None
    x: Optional[str] = None
    w_table: Optional[int] = None
    function: Optional[str] = None
    max_generation: Optional[int] = None

    def render(self) -> List[str]:
        argv = [self.command.value]
        for name, value in self.model_dump(exclude={"command"}).items():
            flag = "--" + name.replace("_", "-")
            if isinstance(value, bool):
                if value:
                    argv.append(flag)
            elif value is not None:
                argv += [flag, repr(value) if isinstance(value, float) else str(value)]
        return argv


# --- Parsing ---

def parse_grid(spec: str) -> List[float]:
    """
    ``start:stop:step`` (stop included), ``log:start:stop:count`` or a
    single number.

    Raises:
        UsageError: for a malformed spec
    """
    parts = spec.split(":")
    try:
        if parts[0] == "log" and len(parts) == 4:
            return [float(v) for v in np.geomspace(float(parts[1]), float(parts[2]), int(parts[3]))]
        if len(parts) == 3:
            start, stop, step = (float(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        if len(parts) == 1:
            return [float(parts[0])]
    except ValueError as e:
        raise UsageError(f"bad grid spec '{spec}': {e}") from e
    raise UsageError(f"bad grid spec '{spec}'")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file with flag names as keys")
    parser.add_argument("--symbol")
    parser.add_argument("--psi")
    parser.add_argument("--h", help="grid spec start:stop:step or log:start:stop:count")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--n-theta", type=int)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carleson-lab", description="Carleson measure and Orlicz criterion lab")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    orlicz = sub.add_parser(Command.ORLICZ.value, help="Orlicz functions and growth probes")
    _common(orlicz)
    orlicz.add_argument("--special", action="store_true")
    orlicz.add_argument("--c1", type=float)
    orlicz.add_argument("--c2", type=float)
    orlicz.add_argument("--depth", type=int)
    orlicz.add_argument("--dump", action="store_true")
    orlicz.add_argument("--probe", choices=[c.value for c in ProbeCondition])
    orlicz.add_argument("--x", help="grid spec for evaluation or probing")

    carleson = sub.add_parser(Command.CARLESON.value, help="Carleson functions of pull-back measures")
    _common(carleson)
    carleson.add_argument("--space", choices=["bergman", "hardy"], default="bergman")
    carleson.add_argument("--kind", choices=[k.value for k in WindowKind], default="W")
    carleson.add_argument("--atoms-out")

    nevanlinna = sub.add_parser(Command.NEVANLINNA.value, help="Counting functions and the equivalence curve")
    _common(nevanlinna)
    nevanlinna.add_argument("--w-table", type=int)

    decomp = sub.add_parser(Command.DECOMP.value, help="Dyadic Calderon-Zygmund decomposition")
    _common(decomp)
    decomp.add_argument("--function", default="cauchy:0.2")
    decomp.add_argument("--max-generation", type=int, default=8)

    criteria = sub.add_parser(Command.CRITERIA.value, help="Compactness criterion ratios")
    _common(criteria)
    criteria.add_argument("--space", choices=["bergman", "hardy"], default="bergman")

    separation = sub.add_parser(Command.SEPARATION.value, help="Hardy versus Bergman separation experiment")
    _common(separation)
    separation.add_argument("--c1", type=float, default=math.pi / 4)
    separation.add_argument("--c2", type=float, default=math.pi)
    separation.add_argument("--depth", type=int, default=5)
    return parser


def _config_tokens(path: str) -> List[str]:
    tokens: List[str] = []
    for key, value in dotenv_values(path).items():
        flag = "--" + key.strip().lstrip("-").replace("_", "-")
        if value is None or value.lower() == "true":
            tokens.append(flag)
        elif value.lower() != "false":
            tokens += [flag, value]
    return tokens


def parse_config(argv: Sequence[str]) -> RunConfig:
    """
    Parse argv into a RunConfig; values from ``--config`` come first so that
    flags on the command line override them.
    """
    argv = list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        if not Path(args.config).is_file():
            raise UsageError(f"config file not found: {args.config}")
        args = parser.parse_args(argv[:1] + _config_tokens(args.config) + argv[1:])
    values = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise UsageError(str(e)) from e


# --- Commands ---

def _require(config: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(config, n) is None]
    if missing:
        raise UsageError(f"{config.command.value} needs --{', --'.join(m.replace('_', '-') for m in missing)}")


def _write_rows(path: str, header: List[str], rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _run_orlicz(config: RunConfig) -> int:
    if config.special:
        _require(config, "c1", "c2", "depth")
        try:
            psi = build_special(config.c1, config.c2, config.depth)
        except OrliczParameterError as e:
            raise UsageError(str(e)) from e
        print(f"{psi.spec}: nodes alpha_0..alpha_{psi.depth}, last slope A_{psi.depth + 1}")
        if config.dump:
            print(psi.to_key_values(), end="")
            for row in _node_table(psi):
                print(" ".join(row))
        if config.out:
            Path(config.out).write_text(psi.to_key_values())
        return EXIT_OK

    _require(config, "psi", "x")
    psi = _psi(config.psi)
    grid = parse_grid(config.x)
    if config.probe:
        report = condition_probe(psi, config.probe, grid)
        print(f"{psi.spec} {report.condition.value}: {report.verdict.value} constant={report.constant} witness={report.witness_points}")
        if config.out:
            _write_rows(config.out, ["condition", "verdict", "constant", "witness"], [
                [report.condition.value, report.verdict.value, report.constant, ";".join(map(repr, report.witness_points))]
            ])
        return EXIT_OK
    values = psi.eval_float(np.array(grid))
    inverse = psi.inv_float(values)
    print(f"{psi.spec}: {len(grid)} points, psi(x_max)={values[-1]:.6g}")
    if config.out:
        _write_rows(config.out, ["x", "psi", "psi_inv_psi"], [[repr(x), repr(float(v)), repr(float(i))] for x, v, i in zip(grid, values, inverse)])
    return EXIT_OK


def _node_table(psi: SpecialPiecewise) -> List[List[str]]:
    rows = []
    for n in range(1, psi.depth + 1):
        rows.append([
            f"n={n}",
            f"alpha={MP.nstr(MP.exp(psi.alphas[n].log_value), 10)}",
            f"A={MP.nstr(MP.exp(psi.A(n).log_value), 10)}",
            f"B={'0' if psi.B(n).is_zero else MP.nstr(MP.exp(psi.B(n).log_value), 10)}",
        ])
    return rows


def _psi(spec: str) -> OrliczFunction:
    try:
        return parse_psi(spec)
    except OrliczParameterError as e:
        raise UsageError(str(e)) from e


def _symbol(config: RunConfig) -> AnalyticSymbol:
    """The selected symbol; a cusp that fails its normalization checks is a numeric failure."""
    try:
        return parse_symbol(config.symbol or "identity")
    except CuspConstructionError:
        raise
    except SymbolError as e:
        raise UsageError(str(e)) from e


def _run_carleson(config: RunConfig) -> int:
    _require(config, "h")
    symbol = _symbol(config)
    if config.space == "hardy":
        mu = pullback_boundary(symbol, config.n_theta or 1 << 16)
    else:
        mu = pullback_area(symbol, config.samples or 1_000_000, config.seed)
    curve = rho_curve(mu, parse_grid(config.h), kind=config.kind or "W")
    print(f"{curve.label} [{config.space}] h={curve.h[0]:.4g}..{curve.h[-1]:.4g} rho={curve.rho[-1]:.6g}")
    if config.out:
        curve.to_csv(config.out)
    if config.atoms_out:
        mu.to_csv(config.atoms_out)
    return EXIT_OK


def _run_nevanlinna(config: RunConfig) -> int:
    symbol = _symbol(config)
    if config.w_table:
        # w uniform in the disk, deterministic in the seed
        w = 0.99 * sample_disk(config.w_table, config.seed)
        n1, n2 = counting_sums(symbol, w)
        print(f"{symbol.describe()}: {len(w)} targets, max N_phi2={float(np.max(n2)):.6g}")
        if config.out:
            _write_rows(config.out, ["w_re", "w_im", "n_phi", "n_phi2"], [
                [repr(float(z.real)), repr(float(z.imag)), repr(float(a)), repr(float(b))] for z, a, b in zip(w, n1, n2)
            ])
        return EXIT_OK
    _require(config, "h")
    curve = equivalence_report(
        symbol,
        parse_grid(config.h),
        n_samples=config.samples or 1_000_000,
        n_theta=config.n_theta or 1 << 16,
        seed=config.seed,
    )
    print(curve.summary())
    if config.out:
        curve.to_csv(config.out)
    return EXIT_OK


def _run_decomp(config: RunConfig) -> int:
    try:
        result = cz_decompose(parse_test_function(config.function), max_generation=config.max_generation)
    except (ValueError, DecompositionThresholdError) as e:
        raise UsageError(str(e)) from e
    print(f"{config.function}: {len(result.cells)} stopping cells, {result.residual_cells} residual cells")
    if config.out:
        result.to_csv(config.out)
    return EXIT_OK


def _run_criteria(config: RunConfig) -> int:
    _require(config, "psi", "h")
    psi = _psi(config.psi)
    symbol = _symbol(config)
    grid = parse_grid(config.h)
    if config.space == "hardy":
        rho = rho_curve(pullback_boundary(symbol, config.n_theta or 1 << 16), grid)
        curve = hardy_compactness_ratio(psi, rho)
    else:
        rho = rho_curve(pullback_area(symbol, config.samples or 1_000_000, config.seed), grid)
        curve = bergman_compactness_ratio(psi, rho)
    print(curve.summary())
    if config.out:
        curve.to_csv(config.out, extra={"source": curve.source.value})
    return EXIT_OK


def _run_separation(config: RunConfig) -> int:
    report = separation_experiment(
        config.c1,
        config.c2,
        config.depth,
        parse_grid(config.h or "0.25:0.6:0.05"),
        n_samples=config.samples or 2_000_000,
        n_theta=config.n_theta or 1 << 16,
        seed=config.seed,
    )
    print(f"separation c1={config.c1:g} c2={config.c2:g} depth={config.depth}: {report.verdict.value}")
    if config.out:
        report.write(config.out)
    if report.verdict == Verdict.PARAMETER_MISUSE:
        return EXIT_USAGE
    if report.verdict == Verdict.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


COMMANDS = {
    Command.ORLICZ: _run_orlicz,
    Command.CARLESON: _run_carleson,
    Command.NEVANLINNA: _run_nevanlinna,
    Command.DECOMP: _run_decomp,
    Command.CRITERIA: _run_criteria,
    Command.SEPARATION: _run_separation,
}


def run(argv: Sequence[str]) -> int:
    """Run one command and return its exit code."""
    try:
        config = parse_config(argv)
        return COMMANDS[config.command](config)
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CarlesonLabError, OSError) as e:
        logger.error("Run failed: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    logging.basicConfig(
        level=os.environ.get("CARLESON_LAB_LOG_LEVEL", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
