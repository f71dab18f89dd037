import argparse
import sys
from pathlib import Path
from typing import List, Optional

from fastmcp import FastMCP
from pydantic import ValidationError

from src.utils import (
    BRUTE_FORCE_MAX_P,
    DEFAULT_TWIST,
    PRESETS,
    BoundsRequest,
    CheckFamilyRequest,
    EmitError,
    KloostermanRequest,
    ParameterError,
    SieveRequest,
    build_sweep_config,
    figure_presets,
    get_logger,
    get_sweep_service,
    load_config,
    parse_formats,
    parse_mode,
    parse_prime_range,
    run_selftest,
    run_sweep,
    set_log_level,
    tightness_shortfall,
    write_outputs,
)

logger = get_logger(__name__)

mcp = FastMCP("prsbox")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARAMETER = 2


@mcp.tool
async def check_family(
    family: str,
    p: int,
    mode: str = "reduced",
    twist: int = DEFAULT_TWIST,
    seed: Optional[int] = None,
) -> str:
    """Certified Walsh or Kloosterman report for a family descriptor at one prime.
    Descriptor syntax: name[:key=value]*, e.g. 'grendel:d=3' or 'kloosterman:m=2,4'."""
    request = CheckFamilyRequest(
        family=family, p=p, mode=parse_mode(mode), twist=twist, seed=seed
    )
    service = get_sweep_service()
    return service.check_family(request)


@mcp.tool
async def kloosterman_report(
    p: int, m: int, e: int = 1, mode: str = "reduced", twist: int = DEFAULT_TWIST
) -> str:
    """Maximal Kloosterman sums over the index-m subgroup of F_p^x, with bounds."""
    request = KloostermanRequest(p=p, m=m, e=e, mode=parse_mode(mode), twist=twist)
    service = get_sweep_service()
    return service.kloosterman_report(request)


@mcp.tool
async def evaluate_bounds(family: str, p: int, seed: Optional[int] = None) -> str:
    """Closed-form spectrum bounds for a family descriptor at one prime."""
    request = BoundsRequest(family=family, p=p, seed=seed)
    service = get_sweep_service()
    return service.evaluate_bounds(request)


@mcp.tool
async def list_presets() -> str:
    """List the figure presets available to the sweep command."""
    service = get_sweep_service()
    return service.list_presets()


@mcp.tool
async def sieve(lo: int, hi: int) -> str:
    """List the primes in [lo, hi]."""
    request = SieveRequest(lo=lo, hi=hi)
    service = get_sweep_service()
    return service.sieve(request)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prsbox",
        description="Walsh spectra of power residue S-boxes and Kloosterman sums over subgroups.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", help="Run a parameter sweep and write CSV/JSON")
    source = sweep.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=sorted(PRESETS), help="Figure preset")
    source.add_argument("--config", type=Path, help="key = value sweep configuration file")
    sweep.add_argument("--primes", help="Prime range lo:hi")
    sweep.add_argument("--mode", help="reduced, brute or cross")
    sweep.add_argument("--twist", type=int, help="Character twist c")
    sweep.add_argument("--workers", type=int, help="Worker processes")
    sweep.add_argument("--seed", type=int, help="Seed for random T tables")
    sweep.add_argument("--out", type=Path, help="Output directory")
    sweep.add_argument("--format", help="csv, json or both")
    sweep.add_argument(
        "--brute-force-max-p",
        type=int,
        help=f"Largest p enumerated by brute force (default {BRUTE_FORCE_MAX_P})",
    )

    check = commands.add_parser("check", help="Certified report for one family at one prime")
    check.add_argument("--family", required=True, help="Family descriptor, e.g. grendel:d=3")
    check.add_argument("--p", type=int, required=True, help="Prime modulus")
    check.add_argument("--mode", default="reduced", help="reduced, brute or cross")
    check.add_argument("--twist", type=int, default=DEFAULT_TWIST, help="Character twist c")
    check.add_argument("--seed", type=int, help="Seed for random T tables")

    commands.add_parser("selftest", help="Reduced against brute-force spectra on small primes")
    commands.add_parser("serve", help="Run the MCP server over stdio")
    return parser


def _sweep_config(args: argparse.Namespace):
    cfg = figure_presets(args.preset) if args.preset else load_config(args.config)
    overrides = {
        "prime_range": parse_prime_range(args.primes) if args.primes else None,
        "mode": parse_mode(args.mode) if args.mode else None,
        "twist": args.twist,
        "workers": args.workers,
        "seed": args.seed,
        "output_dir": args.out,
        "formats": parse_formats(args.format) if args.format else None,
        "brute_force_max_p": args.brute_force_max_p,
    }
    fields = cfg.model_dump()
    fields.update({key: value for key, value in overrides.items() if value is not None})
    return build_sweep_config(**fields)


def _run_sweep(args: argparse.Namespace) -> int:
    cfg = _sweep_config(args)
    rows, summary = run_sweep(cfg)
    for path in write_outputs(cfg, rows, summary):
        print(path)
    if summary.violations or summary.cross_mismatches:
        logger.error(
            f"{summary.violations} bound violations, {summary.cross_mismatches} cross-check mismatches"
        )
        return EXIT_VIOLATION
    shortfall = tightness_shortfall(summary)
    if shortfall is not None:
        logger.error(shortfall)
        return EXIT_VIOLATION
    return EXIT_OK


def _run_check(args: argparse.Namespace) -> int:
    request = CheckFamilyRequest(
        family=args.family, p=args.p, mode=parse_mode(args.mode), twist=args.twist, seed=args.seed
    )
    outcome = get_sweep_service().check(request)
    print(outcome.text)
    if outcome.error is not None:
        return EXIT_PARAMETER
    return EXIT_VIOLATION if outcome.violations or outcome.cross_mismatches else EXIT_OK


def _run_selftest() -> int:
    ok, lines = run_selftest()
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_VIOLATION


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry point."""
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_log_level("DEBUG")
    elif args.quiet:
        set_log_level("WARNING")

    try:
        if args.command == "sweep":
            return _run_sweep(args)
        if args.command == "check":
            return _run_check(args)
        if args.command == "selftest":
            return _run_selftest()
        mcp.run(transport="stdio")
        return EXIT_OK
    except (ParameterError, ValidationError) as e:
        logger.error(f"Parameter error: {e}")
        return EXIT_PARAMETER
    except EmitError as e:
        logger.error(f"Output error: {e}")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
