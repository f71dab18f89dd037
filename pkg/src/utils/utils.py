from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from .config import FLOAT_DIGITS
from .errors import ParameterError
from .logging import get_logger
from .models import (
    KLOOSTERMAN_FAMILY,
    BoundReport,
    FamilyDescriptor,
    FamilyInstance,
    SpectrumReport,
    SweepConfig,
)

logger = get_logger(__name__)

LIST_KEYS = ("d", "m", "n", "e", "d_plus", "d_minus")
MODE_ALIASES = {
    "reduced": "reduced",
    "brute": "brute_force",
    "brute_force": "brute_force",
    "cross": "cross_check",
    "cross_check": "cross_check",
}
FORMAT_ALIASES = {"csv": ["csv"], "json": ["json"], "both": ["csv", "json"]}


def parse_int_list(text: str) -> List[int]:
    """Parse a comma separated list of integers."""
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ParameterError(f"expected integers, got '{text}'") from e


def parse_prime_range(text: str) -> Tuple[int, int]:
    """Parse a `lo:hi` prime range; a single number means `p:p`.

    Args:
        text (str): The range as written on the command line or in a config.

    Returns:
        Tuple[int, int]: The inclusive bounds.

    """
    parts = text.strip().split(":")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ParameterError(f"prime range must look like lo:hi, got '{text}'")
    try:
        lo, hi = int(parts[0]), int(parts[1])
    except ValueError as e:
        raise ParameterError(f"prime range must look like lo:hi, got '{text}'") from e
    if lo < 2 or hi < lo:
        raise ParameterError(f"prime range {lo}:{hi} must satisfy 2 <= lo <= hi")
    return lo, hi


def parse_family_descriptor(text: str) -> FamilyDescriptor:
    """Parse `name[:key=value]*` into a FamilyDescriptor.

    Values may be comma separated lists. `t` is one of identity, shifted,
    random, or a comma list of explicit table entries.

    Args:
        text (str): e.g. "power_residue:d=inverse:m=2,4,8,16:t=random:instances=3"

    Returns:
        FamilyDescriptor: The validated descriptor.

    """
    name, *pairs = [part.strip() for part in text.strip().split(":")]
    fields: Dict[str, Any] = {"name": name}
    for pair in pairs:
        if "=" not in pair:
            raise ParameterError(f"expected key=value in family descriptor, got '{pair}'")
        key, value = (item.strip() for item in pair.split("=", 1))
        if key == "d":
            fields["d"] = [item.strip() for item in value.split(",") if item.strip()]
        elif key in LIST_KEYS:
            fields[key] = parse_int_list(value)
        elif key in ("a", "instances"):
            fields[key] = parse_int_list(value)[0] if value else None
        elif key == "f":
            fields["f"] = tuple(parse_int_list(value))
        elif key == "t":
            if value in ("identity", "shifted", "random"):
                fields["t"] = value
            else:
                fields["t"] = "explicit"
                fields["table"] = tuple(parse_int_list(value))
        else:
            raise ParameterError(f"unknown family parameter '{key}' in '{text}'")
    for item in fields.get("d", []):
        if item != "inverse" and not item.lstrip("-").isdigit():
            raise ParameterError(f"d must be an integer or 'inverse', got '{item}'")
    try:
        return FamilyDescriptor(**fields)
    except ValidationError as e:
        raise ParameterError(f"invalid family descriptor '{text}': {e}") from e


def parse_config_text(text: str) -> SweepConfig:
    """Parse a flat `key = value` sweep configuration.

    Lines starting with `#` are comments; `family` may repeat.

    Args:
        text (str): The file contents.

    Returns:
        SweepConfig: The validated configuration.

    """
    fields: Dict[str, Any] = {"families": []}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {number}: expected key = value, got '{raw}'")
        key, value = (item.strip() for item in line.split("=", 1))
        if key == "family":
            fields["families"].append(parse_family_descriptor(value))
        elif key == "primes":
            fields["prime_range"] = parse_prime_range(value)
        elif key == "mode":
            fields["mode"] = parse_mode(value)
        elif key == "format":
            fields["formats"] = parse_formats(value)
        elif key == "out":
            fields["output_dir"] = Path(value)
        elif key in ("twist", "workers", "seed", "brute_force_max_p"):
            fields[key] = parse_int_list(value)[0]
        elif key == "name":
            fields["name"] = value
        else:
            raise ParameterError(f"line {number}: unknown key '{key}'")
    return build_sweep_config(**fields)


def load_config(path: Path) -> SweepConfig:
    """Read and parse a sweep configuration file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParameterError(f"cannot read config {path}: {e}") from e
    logger.info(f"Loaded sweep config from {path}")
    return parse_config_text(text)


def build_sweep_config(**fields: Any) -> SweepConfig:
    """SweepConfig with pydantic errors surfaced as parameter errors."""
    if "prime_range" not in fields:
        raise ParameterError("sweep config needs a prime range")
    try:
        return SweepConfig(**fields)
    except ValidationError as e:
        raise ParameterError(f"invalid sweep config: {e}") from e


def parse_mode(text: str) -> str:
    try:
        return MODE_ALIASES[text.strip()]
    except KeyError as e:
        raise ParameterError(f"unknown mode '{text}', expected reduced, brute or cross") from e


def parse_formats(text: str) -> List[str]:
    try:
        return FORMAT_ALIASES[text.strip()]
    except KeyError as e:
        raise ParameterError(f"unknown format '{text}', expected csv, json or both") from e


def _require(values: List[Any], key: str, name: str) -> List[Any]:
    if not values:
        raise ParameterError(f"family '{name}' needs a non-empty '{key}' grid")
    return values


def _table_variants(desc: FamilyDescriptor) -> List[Dict[str, Any]]:
    if desc.t == "random":
        return [{"t": "random", "t_index": i} for i in range(desc.instances)]
    if desc.t == "explicit":
        return [{"t": "explicit", "table": desc.table}]
    return [{"t": desc.t}]


def _label(desc: FamilyDescriptor, variant: Dict[str, Any]) -> str:
    if variant["t"] == "random":
        return f"{desc.name}[random#{variant['t_index']}]"
    if variant["t"] == "explicit":
        return f"{desc.name}[T={'/'.join(str(v) for v in desc.table)}]"
    if variant["t"] == "shifted" or desc.name in ("shallue", "shifted_legendre"):
        return f"{desc.name}[a={desc.a}]"
    return desc.name


def expand_instances(desc: FamilyDescriptor) -> List[FamilyInstance]:
    """Expand a descriptor's parameter grids into concrete instances.

    Args:
        desc (FamilyDescriptor): The family and its grids.

    Returns:
        List[FamilyInstance]: One instance per grid point and table variant.

    """
    name = desc.name
    grids: List[Dict[str, Any]]
    if name == KLOOSTERMAN_FAMILY:
        grids = [{"m": m, "e": e} for m, e in product(_require(desc.m, "m", name), desc.e or [1])]
    elif name == "power_residue":
        grids = [
            {"d": d, "m": m}
            for d, m in product(_require(desc.d, "d", name), _require(desc.m, "m", name))
        ]
    elif name in ("grendel", "shifted_legendre"):
        grids = [{"d": d, "m": 2} for d in _require(desc.d, "d", name)]
    elif name in ("shallue", "polynomial_residue"):
        grids = [{"m": m} for m in _require(desc.m, "m", name)]
    elif name == "polocolo":
        if desc.n:
            grids = [{"n": n, "m": 2**n} for n in desc.n]
        else:
            grids = [{"m": m} for m in _require(desc.m, "m or n", name)]
    elif name == "scaled_inverse":
        grids = [
            {"e": e, "m": m}
            for e, m in product(_require(desc.e, "e", name), _require(desc.m, "m", name))
        ]
    elif name == "grassi_two_exponent":
        plus, minus = _require(desc.d_plus, "d_plus", name), _require(desc.d_minus, "d_minus", name)
        if len(plus) != len(minus):
            raise ParameterError("d_plus and d_minus grids are paired and must have equal length")
        grids = [{"d_plus": dp, "d_minus": dm, "m": 2} for dp, dm in zip(plus, minus)]
    else:
        raise ParameterError(f"unknown family '{name}'")

    if name in ("shallue", "shifted_legendre") and desc.a is None:
        raise ParameterError(f"family '{name}' needs a shift 'a'")
    if desc.t == "shifted" and desc.a is None:
        raise ParameterError("shifted T needs 'a'")

    instances = []
    for grid in grids:
        for variant in _table_variants(desc) if name != KLOOSTERMAN_FAMILY else [{"t": "identity"}]:
            instances.append(
                FamilyInstance(
                    name=name,
                    label=_label(desc, variant) if name != KLOOSTERMAN_FAMILY else name,
                    a=desc.a,
                    f=desc.f,
                    **grid,
                    **variant,
                )
            )
    return instances


def format_float(value: float) -> str:
    """Float with the configured number of significant digits."""
    return f"{value:.{FLOAT_DIGITS}g}"


def format_bool(value: bool) -> str:
    return "true" if value else "false"


def format_report(
    report: SpectrumReport, bounds: Optional[BoundReport] = None, extra: Optional[Dict[str, Any]] = None
) -> str:
    """Render a spectrum report, with its bounds if given, as readable text."""
    lines = [
        f"{report.kind} spectrum of {report.family} over F_{report.p} "
        f"(m={report.m}, d={report.d_spec}, mode={report.mode}, twist={report.twist})",
        f"sums evaluated: {report.sums_evaluated}",
    ]
    for case, maximum in report.cases.items():
        line = (
            f"  {case.value:<17} max={format_float(maximum.max_abs)} "
            f"at (a={maximum.witness_a}, b={maximum.witness_b})"
        )
        if bounds is not None and case in bounds.cases:
            bound = bounds.cases[case]
            line += (
                f"  bound={format_float(bound.value)} [{bound.formula}]"
                f"{'' if bound.informative else ' (non-informative)'}"
            )
        lines.append(line)
    lines.append(f"correlation: {format_float(report.correlation_max)}")
    if report.proof_degenerate is not None:
        lines.append(
            f"max over -a/b in image(T): {format_float(report.proof_degenerate.max_abs)}"
        )
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    return "\n".join(lines)
