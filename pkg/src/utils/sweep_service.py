from functools import lru_cache
from typing import List

from pydantic import ValidationError

from .bounds import kloosterman_bound_report, reference_bounds, walsh_bound_report
from .config import tolerance
from .errors import ParameterError, PrsboxError
from .field_core import check_index, find_generator, subgroup
from .logging import get_logger
from .models import (
    KLOOSTERMAN_FAMILY,
    BoundReport,
    BoundsRequest,
    CheckFamilyRequest,
    CheckOutcome,
    ErrorResponse,
    KloostermanRequest,
    SieveRequest,
)
from .sbox_families import is_permutation, residue_table_profile
from .spectra import AdditiveCharacter, kloosterman_spectrum
from .sweep import (
    PRESETS,
    compare_reports,
    evaluate_instance,
    instance_spec,
    sieve_primes,
)
from .utils import expand_instances, format_float, format_report, parse_family_descriptor

logger = get_logger(__name__)


def _error_text(error: ErrorResponse) -> str:
    return f"Error: {error.error} - {error.details}"


def _render_bounds(bounds: BoundReport) -> str:
    lines = [
        f"{bounds.kind} bounds for {bounds.family} over F_{bounds.p} "
        f"(m={bounds.m}, d={bounds.d_spec}, trivial={format_float(bounds.trivial)})"
    ]
    for case, value in bounds.cases.items():
        lines.append(
            f"  {case.value:<17} {format_float(value.value)} [{value.formula}]"
            f"{'' if value.informative else ' (non-informative)'}"
        )
    return "\n".join(lines)


class SweepService:
    """Service that turns single-report operations into readable text."""

    def check(self, request: CheckFamilyRequest) -> CheckOutcome:
        """Evaluate and certify every instance of a family descriptor at one prime."""
        try:
            find_generator(request.p)
            desc = parse_family_descriptor(request.family)
            parts: List[str] = []
            violations = 0
            mismatches = 0
            evaluated = 0
            for instance in expand_instances(desc):
                try:
                    report, bounds, brute = evaluate_instance(
                        instance, request.p, request.mode, request.twist, request.seed
                    )
                except (PrsboxError, ValidationError) as e:
                    parts.append(f"{instance.label} (m={instance.m}): skipped, {e}")
                    continue
                evaluated += 1
                failed = [
                    case.value
                    for case, maximum in report.cases.items()
                    if not tolerance.certifies(maximum.max_abs, bounds.cases[case].value, request.p)
                ]
                violations += len(failed)
                extra = {"certified": "yes" if not failed else f"NO ({', '.join(failed)})"}
                if brute is not None:
                    problems = compare_reports(report, brute)
                    mismatches += len(problems)
                    extra["cross-check"] = "agree" if not problems else "; ".join(problems)
                parts.append(format_report(report, bounds, extra))
            if not evaluated:
                raise ParameterError("no instance could be evaluated: " + "; ".join(parts))
            return CheckOutcome(
                text="\n\n".join(parts), violations=violations, cross_mismatches=mismatches
            )
        except (PrsboxError, ValidationError) as e:
            error_response = ErrorResponse(
                error="Error checking family", details=str(e), success=False
            )
            logger.error(f"Error checking family '{request.family}' at p={request.p}: {e}")
            return CheckOutcome(text=_error_text(error_response), error=error_response)

    def check_family(self, request: CheckFamilyRequest) -> str:
        return self.check(request).text

    def kloosterman_report(self, request: KloostermanRequest) -> str:
        """Kloosterman spectrum over the index-m subgroup, with its bounds."""
        try:
            ctx = find_generator(request.p)
            check_index(request.p, request.m)
            G = subgroup(ctx, request.m)
            chi = AdditiveCharacter.create(request.p, request.twist)
            report = kloosterman_spectrum(G, chi, request.e, request.mode)
            bounds = kloosterman_bound_report(request.p, G.order, request.e)
            refs = reference_bounds(request.p)
            return format_report(
                report,
                bounds,
                {
                    "subgroup order": G.order,
                    "conjectured bound 4sqrt(q)": format_float(refs.conjecture),
                },
            )
        except (PrsboxError, ValidationError) as e:
            error_response = ErrorResponse(
                error="Error computing Kloosterman spectrum", details=str(e), success=False
            )
            logger.error(f"Error computing Kloosterman spectrum: {e}")
            return _error_text(error_response)

    def evaluate_bounds(self, request: BoundsRequest) -> str:
        """Closed-form bounds only; no sums are evaluated."""
        try:
            ctx = find_generator(request.p)
            desc = parse_family_descriptor(request.family)
            parts = []
            for instance in expand_instances(desc):
                try:
                    if instance.name == KLOOSTERMAN_FAMILY:
                        check_index(request.p, instance.m)
                        bounds = kloosterman_bound_report(
                            request.p, (request.p - 1) // instance.m, instance.e
                        )
                    else:
                        spec = instance_spec(instance, ctx, request.seed)
                        profile = (
                            residue_table_profile(spec.table, ctx) if hasattr(spec, "table") else None
                        )
                        bounds = walsh_bound_report(
                            spec, ctx, is_permutation(spec, ctx).bijective, profile
                        )
                except (PrsboxError, ValidationError) as e:
                    parts.append(f"{instance.label} (m={instance.m}): no bounds, {e}")
                    continue
                parts.append(_render_bounds(bounds))
            refs = reference_bounds(request.p)
            parts.append(
                f"reference: conjecture {format_float(refs.conjecture)}, "
                f"proven Kloosterman {format_float(refs.proven_kloosterman)}"
            )
            return "\n\n".join(parts)
        except (PrsboxError, ValidationError) as e:
            error_response = ErrorResponse(
                error="Error evaluating bounds", details=str(e), success=False
            )
            logger.error(f"Error evaluating bounds: {e}")
            return _error_text(error_response)

    def list_presets(self) -> str:
        return "\n".join(f"{name}: {description}" for name, description in PRESETS.items())

    def sieve(self, request: SieveRequest) -> str:
        try:
            primes = sieve_primes(request.lo, request.hi)
            if not primes:
                return f"No primes in [{request.lo}, {request.hi}]."
            return f"{len(primes)} primes: " + ", ".join(str(p) for p in primes)
        except (PrsboxError, ValidationError) as e:
            error_response = ErrorResponse(
                error="Error sieving primes", details=str(e), success=False
            )
            logger.error(f"Error sieving primes: {e}")
            return _error_text(error_response)


@lru_cache(maxsize=1)
def get_sweep_service() -> SweepService:
    """Get the shared SweepService instance."""
    return SweepService()
