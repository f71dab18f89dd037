"""Parallel sweeps over (family instance, prime), certification and output."""

import csv
import multiprocessing
from math import sqrt
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError
from sympy import divisors, primerange

from .bounds import (
    bound_precondition,
    kloosterman_bound_report,
    walsh_bound_report,
)
from .config import (
    CSV_HEADER,
    FIGURE_PRIME_LIMIT,
    FIGURE_SUBGROUP_INDICES,
    GKRS_PRIME_LIMIT,
    KLOOSTERMAN_TIGHTNESS_MIN,
    SELFTEST_PRIMES,
    SELFTEST_RANDOM_PAIRS,
    tolerance,
)
from .errors import ConsistencyError, EmitError, ParameterError, PresetError
from .field_core import check_index, find_generator, residue_subgroup, subgroup
from .logging import get_logger
from .models import (
    KLOOSTERMAN_FAMILY,
    BoundCase,
    BoundReport,
    FamilyDescriptor,
    FamilyInstance,
    FieldContext,
    JobResult,
    SBoxSpec,
    SkipRecord,
    SpectrumReport,
    SweepConfig,
    SweepJob,
    SweepRow,
    SweepSummary,
)
from .sbox_families import (
    explicit_table,
    is_permutation,
    make_named_family,
    random_table,
    shifted_table,
)
from .spectra import (
    AdditiveCharacter,
    efficient_spectrum_check,
    kloosterman_orbit_check,
    kloosterman_spectrum,
    reduction_identity_check,
    restricted_reduction_check,
    walsh_spectrum,
)
from .utils import expand_instances, format_bool, format_float

logger = get_logger(__name__)

MAX_SIEVE = 2**32
CROSS_CHECK_TOLERANCE = 1e-6


def sieve_primes(lo: int, hi: int) -> List[int]:
    """All primes in [lo, hi], ascending."""
    if lo > hi:
        return []
    if lo < 2 or hi > MAX_SIEVE:
        raise ParameterError(f"sieve range must satisfy 2 <= lo <= hi <= 2^32, got {lo}:{hi}")
    return [int(p) for p in primerange(lo, hi + 1)]


PRESETS: Dict[str, str] = {
    "kloosterman": "Kloosterman sums over index-m subgroups, m in {2,4,8,16}, p <= 2048",
    "inverse": "x^(q-2) * (x/q)_m, m in {2,4,8,16}, p <= 2048",
    "small_d": "x^d * (x/q)_m, 1 <= d <= 5, m in {2,4,8,16}, p <= 2048",
    "gkrs": "two-exponent Legendre S-box, (d+, d-) in {(3,5), (5,7)}, p <= 1024",
}


def figure_presets(name: str, **overrides: Any) -> SweepConfig:
    """The parameter grid of a named preset."""
    m = list(FIGURE_SUBGROUP_INDICES)
    if name == "kloosterman":
        families = [FamilyDescriptor(name=KLOOSTERMAN_FAMILY, m=m)]
        prime_range = (3, FIGURE_PRIME_LIMIT)
    elif name == "inverse":
        families = [FamilyDescriptor(name="power_residue", d=["inverse"], m=m)]
        prime_range = (3, FIGURE_PRIME_LIMIT)
    elif name == "small_d":
        families = [
            FamilyDescriptor(name="power_residue", d=[str(d) for d in range(1, 6)], m=m)
        ]
        prime_range = (3, FIGURE_PRIME_LIMIT)
    elif name == "gkrs":
        families = [
            FamilyDescriptor(name="grassi_two_exponent", d_plus=[3, 5], d_minus=[5, 7])
        ]
        prime_range = (3, GKRS_PRIME_LIMIT)
    else:
        raise PresetError(f"unknown preset '{name}', expected one of {', '.join(PRESETS)}")
    fields = {"name": name, "prime_range": prime_range, "families": families}
    fields.update({key: value for key, value in overrides.items() if value is not None})
    return SweepConfig(**fields)


def instance_spec(instance: FamilyInstance, ctx: FieldContext, seed: Optional[int]) -> SBoxSpec:
    """Bind a family instance to F_p."""
    params: Dict[str, Any] = {
        "d": instance.d,
        "m": instance.m,
        "n": instance.n,
        "e": instance.e,
        "a": instance.a,
        "d_plus": instance.d_plus,
        "d_minus": instance.d_minus,
        "f": instance.f,
    }
    if instance.m is not None and instance.name not in ("grendel", "shifted_legendre", "shallue"):
        check_index(ctx.p, instance.m)
        if instance.t == "shifted":
            params["table"] = shifted_table(ctx, instance.m, instance.a)
        elif instance.t == "random":
            if seed is None:
                raise ParameterError("random T needs a seed")
            params["table"] = random_table(ctx, instance.m, seed, instance.t_index)
        elif instance.t == "explicit":
            params["table"] = explicit_table(ctx, instance.m, instance.table)
    return make_named_family(instance.name, params, ctx)


def _rows(
    label: str, report: SpectrumReport, bounds: BoundReport
) -> List[SweepRow]:
    rows = []
    p = report.p
    for case, maximum in report.cases.items():
        bound = bounds.cases[case]
        violation = not tolerance.certifies(maximum.max_abs, bound.value, p)
        if violation:
            logger.error(
                f"Bound violated: {label} p={p} m={report.m} d={report.d_spec} {case.value}: "
                f"{maximum.max_abs} > {bound.value} ({bound.formula})"
            )
        rows.append(
            SweepRow(
                family=label,
                p=p,
                m=report.m,
                d_spec=report.d_spec,
                case=case,
                max_abs=maximum.max_abs,
                witness_a=maximum.witness_a,
                witness_b=maximum.witness_b,
                bound=bound.value,
                ratio=tolerance.ratio(maximum.max_abs, bound.value, p),
                informative=bound.informative,
                violation=violation,
            )
        )
    return rows


def compare_reports(reduced: SpectrumReport, brute: SpectrumReport) -> List[str]:
    """Cases where two spectra of the same object disagree."""
    problems = []
    for case in set(reduced.cases) | set(brute.cases):
        if case not in reduced.cases or case not in brute.cases:
            problems.append(f"{case.value}: present in only one report")
            continue
        diff = abs(reduced.cases[case].max_abs - brute.cases[case].max_abs)
        if diff > CROSS_CHECK_TOLERANCE:
            problems.append(
                f"{case.value}: reduced {reduced.cases[case].max_abs} vs brute {brute.cases[case].max_abs}"
            )
    return problems


def evaluate_instance(
    instance: FamilyInstance,
    p: int,
    mode: str = "reduced",
    twist: int = 1,
    seed: Optional[int] = None,
    brute_force_max_p: Optional[int] = None,
) -> Tuple[SpectrumReport, BoundReport, Optional[SpectrumReport]]:
    """Spectrum, bounds and (in cross-check mode) the brute-force spectrum for one job."""
    ctx = find_generator(p)
    chi = AdditiveCharacter.create(p, twist)
    spectrum_mode = "brute_force" if mode == "brute_force" else "reduced"
    cap = {} if brute_force_max_p is None else {"brute_force_max_p": brute_force_max_p}

    if instance.name == KLOOSTERMAN_FAMILY:
        check_index(p, instance.m)
        G = subgroup(ctx, instance.m)
        report = kloosterman_spectrum(G, chi, instance.e, spectrum_mode, **cap)
        bounds = kloosterman_bound_report(p, G.order, instance.e)
        brute = (
            kloosterman_spectrum(G, chi, instance.e, "brute_force", **cap)
            if mode == "cross_check"
            else None
        )
        return report, bounds, brute

    spec = instance_spec(instance, ctx, seed)
    reason = bound_precondition(spec, ctx)
    if reason is not None:
        raise ParameterError(reason)
    report = walsh_spectrum(spec, chi, ctx, spectrum_mode, **cap)
    bounds = walsh_bound_report(
        spec, ctx, is_permutation(spec, ctx).bijective, report.table_profile
    )
    brute = walsh_spectrum(spec, chi, ctx, "brute_force", **cap) if mode == "cross_check" else None
    return report, bounds, brute


def _run_job(job: SweepJob) -> JobResult:
    instance = job.instance
    try:
        report, bounds, brute = evaluate_instance(
            instance, job.p, job.mode, job.twist, job.seed, job.brute_force_max_p
        )
    except (ParameterError, ValidationError) as e:
        logger.info(f"Skipping {instance.label} (m={instance.m}) at p={job.p}: {e}")
        return JobResult(skip=SkipRecord(family=instance.label, p=job.p, reason=str(e)))
    except ConsistencyError as e:
        logger.error(f"Inconsistent results for {instance.label} p={job.p} m={instance.m}: {e}")
        raise ConsistencyError(f"{instance.label} p={job.p} m={instance.m}: {e}") from e

    mismatches = 0
    if brute is not None:
        for problem in compare_reports(report, brute):
            logger.error(f"Cross-check mismatch {instance.label} p={job.p} m={report.m}: {problem}")
            mismatches += 1
    return JobResult(rows=_rows(instance.label, report, bounds), cross_mismatches=mismatches)


def build_jobs(cfg: SweepConfig) -> List[SweepJob]:
    primes = sieve_primes(*cfg.prime_range)
    jobs = []
    for desc in cfg.families:
        for instance in expand_instances(desc):
            for p in primes:
                jobs.append(
                    SweepJob(
                        instance=instance,
                        p=p,
                        mode=cfg.mode,
                        twist=cfg.twist,
                        seed=cfg.seed,
                        brute_force_max_p=cfg.brute_force_max_p,
                    )
                )
    return jobs


def row_key(row: SweepRow) -> Tuple[str, int, int, str, int]:
    return (row.family, row.p, row.m, row.d_spec, row.case.rank)


def summarize(cfg: SweepConfig, jobs: int, results: List[JobResult], rows: List[SweepRow]) -> SweepSummary:
    skips = [result.skip for result in results if result.skip is not None]
    family_max_ratio: Dict[str, float] = {}
    for row in rows:
        family_max_ratio[row.family] = max(family_max_ratio.get(row.family, 0.0), row.ratio)
    tight = [
        row.max_abs / (2 * sqrt(row.p))
        for row in rows
        if row.family == KLOOSTERMAN_FAMILY and row.m == 2 and row.case == BoundCase.MIXED
    ]
    violations = sum(row.violation for row in rows)
    return SweepSummary(
        name=cfg.name,
        mode=cfg.mode,
        seed=cfg.seed,
        prime_range=cfg.prime_range,
        jobs=jobs,
        evaluated=jobs - len(skips),
        skipped=len(skips),
        rows=len(rows),
        certified=len(rows) - violations,
        violations=violations,
        non_informative=sum(not row.informative for row in rows),
        cross_mismatches=sum(result.cross_mismatches for result in results),
        family_max_ratio=family_max_ratio,
        kloosterman_tightness=max(tight) if tight else None,
        skips=skips,
    )


def run_sweep(cfg: SweepConfig) -> Tuple[List[SweepRow], SweepSummary]:
    """Evaluate every job, certify it against its bounds and fold the results in a fixed order."""
    jobs = build_jobs(cfg)
    logger.info(
        f"Sweep '{cfg.name}': {len(jobs)} jobs over primes {cfg.prime_range[0]}:{cfg.prime_range[1]} "
        f"mode={cfg.mode} workers={cfg.workers}"
    )
    if cfg.workers > 1 and len(jobs) > 1:
        with multiprocessing.get_context("spawn").Pool(cfg.workers) as pool:
            results = pool.map(_run_job, jobs, chunksize=1)
    else:
        results = [_run_job(job) for job in jobs]

    rows = sorted((row for result in results for row in result.rows), key=row_key)
    summary = summarize(cfg, len(jobs), results, rows)
    logger.info(
        f"Sweep '{cfg.name}' done: {summary.evaluated} evaluated, {summary.skipped} skipped, "
        f"{summary.violations} violations, {summary.cross_mismatches} cross-check mismatches"
    )
    if summary.kloosterman_tightness is not None:
        logger.info(
            f"Sweep '{cfg.name}' m = 2 Kloosterman tightness "
            f"{format_float(summary.kloosterman_tightness)}"
        )
    return rows, summary


def tightness_shortfall(summary: SweepSummary) -> Optional[str]:
    """Why the kloosterman preset failed its tightness floor, or None if it did not."""
    if summary.name != "kloosterman" or summary.kloosterman_tightness is None:
        return None
    if summary.kloosterman_tightness >= KLOOSTERMAN_TIGHTNESS_MIN:
        return None
    return (
        f"m = 2 Kloosterman tightness {format_float(summary.kloosterman_tightness)} "
        f"is below {KLOOSTERMAN_TIGHTNESS_MIN}"
    )


def emit_csv(rows: List[SweepRow], path: Path, seed: Optional[int] = None) -> Path:
    """Write rows under the fixed header, preceded by a `# seed=` line."""
    if not rows:
        raise EmitError("nothing to emit")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            f.write(f"# seed={seed if seed is not None else 'none'}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in rows:
                writer.writerow(
                    [
                        row.family,
                        row.p,
                        row.m,
                        row.d_spec,
                        row.case.value,
                        format_float(row.max_abs),
                        row.witness_a,
                        row.witness_b,
                        format_float(row.bound),
                        format_float(row.ratio),
                        format_bool(row.informative),
                    ]
                )
    except OSError as e:
        raise EmitError(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def emit_json(summary: SweepSummary, path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise EmitError(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote summary to {path}")
    return path


def write_outputs(cfg: SweepConfig, rows: List[SweepRow], summary: SweepSummary) -> List[Path]:
    paths = []
    if "csv" in cfg.formats:
        paths.append(emit_csv(rows, cfg.output_dir / f"{cfg.name}.csv", cfg.seed))
    if "json" in cfg.formats:
        paths.append(emit_json(summary, cfg.output_dir / f"{cfg.name}.json"))
    return paths


# Self test


def _shallue_shift(ctx: FieldContext, m: int) -> Optional[int]:
    """Smallest a with a and -a both outside the order-m subgroup."""
    roots = set(residue_subgroup(ctx, m))
    for a in range(1, ctx.p):
        if a not in roots and (-a) % ctx.p not in roots:
            return a
    return None


def _selftest_instances(p: int, ctx: FieldContext) -> List[Tuple[str, SBoxSpec]]:
    specs = []
    for m in (2, 3, 4):
        if (p - 1) % m:
            continue
        inverse = {"d": "inverse", "m": m}
        specs.append(("inverse", make_named_family("power_residue", inverse, ctx)))
        specs.append(("d=1", make_named_family("power_residue", {"d": 1, "m": m}, ctx)))
        specs.append(
            (
                "random T",
                make_named_family(
                    "power_residue", {**inverse, "table": random_table(ctx, m, 0)}, ctx
                ),
            )
        )
        a = _shallue_shift(ctx, m)
        if a is not None:
            specs.append(("shallue", make_named_family("shallue", {"m": m, "a": a}, ctx)))
        if 3 * m < p:
            specs.append(("d=3", make_named_family("power_residue", {"d": 3, "m": m}, ctx)))
        specs.append(("scaled e=2", make_named_family("scaled_inverse", {"e": 2, "m": m}, ctx)))
    return specs


def run_selftest(primes: Optional[List[int]] = None) -> Tuple[bool, List[str]]:
    """Reduced against brute-force spectra plus the reduction identities on small primes."""
    lines: List[str] = []
    ok = True
    for p in primes or SELFTEST_PRIMES:
        ctx = find_generator(p)
        chi = AdditiveCharacter.create(p)
        checked = 0
        rng = np.random.default_rng(p)
        for m in divisors(p - 1):
            G = subgroup(ctx, m)
            for e in (1, 2):
                problems = compare_reports(
                    kloosterman_spectrum(G, chi, e), kloosterman_spectrum(G, chi, e, "brute_force")
                )
                checked += 1
                for problem in problems:
                    ok = False
                    lines.append(f"FAIL kloosterman p={p} m={m} e={e}: {problem}")
            pairs = [(1, 1), (2, 3), (p - 1, 5)]
            pairs += [(int(a), int(b)) for a, b in rng.integers(1, p, size=(SELFTEST_RANDOM_PAIRS, 2))]
            for a, b in pairs:
                residual = max(
                    reduction_identity_check(G, chi, a, b),
                    kloosterman_orbit_check(G, chi, a, b),
                    restricted_reduction_check(3, G, chi, a, b),
                )
                if residual > 1e-9 * p:
                    ok = False
                    lines.append(f"FAIL identity p={p} m={m} (a={a}, b={b}): residual {residual}")
        for name, spec in _selftest_instances(p, ctx):
            problems = compare_reports(
                walsh_spectrum(spec, chi, ctx), walsh_spectrum(spec, chi, ctx, "brute_force")
            )
            residual = efficient_spectrum_check(spec, chi, ctx, 3, 2)
            checked += 1
            for problem in problems:
                ok = False
                lines.append(f"FAIL {name} p={p} m={spec.m}: {problem}")
            if residual > 1e-9 * p:
                ok = False
                lines.append(f"FAIL {name} p={p} m={spec.m}: reduction residual {residual}")
        lines.append(f"p={p}: {checked} spectra compared")
    lines.append("selftest passed" if ok else "selftest FAILED")
    return ok, lines
