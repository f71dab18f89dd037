"""Closed-form upper bounds for Walsh and Kloosterman spectra, per case."""

from math import gcd, log2, sqrt
from typing import Callable, Dict, Optional, Tuple

from .errors import ParameterError
from .logging import get_logger
from .models import (
    BoundCase,
    BoundReport,
    BoundValue,
    FieldContext,
    PolynomialResidueSpec,
    PowerResidueSpec,
    ReferenceBounds,
    SBoxSpec,
    TableProfile,
    TwoExponentLegendreSpec,
)

logger = get_logger(__name__)

WALSH_CASES = (BoundCase.BOTH_ZERO, BoundCase.A_ONLY, BoundCase.B_ONLY, BoundCase.MIXED)
KLOOSTERMAN_CASES = WALSH_CASES


def _check_divisor(p: int, m: int) -> None:
    if m < 1 or (p - 1) % m:
        raise ParameterError(f"m = {m} does not divide p - 1 = {p - 1}")


def _check_order(p: int, subgroup_order: int) -> None:
    if subgroup_order < 1 or (p - 1) % subgroup_order:
        raise ParameterError(f"|G| = {subgroup_order} does not divide p - 1 = {p - 1}")


def _no_degenerate(case: BoundCase) -> None:
    if case == BoundCase.MIXED_DEGENERATE:
        raise ParameterError("mixed_degenerate only exists for d = 1 families")


# Kloosterman sums over subgroups


def kloosterman_bound(p: int, subgroup_order: int, case: BoundCase) -> float:
    """Bounds on K(G, a, b) for G of the given order."""
    _check_order(p, subgroup_order)
    _no_degenerate(case)
    if case == BoundCase.BOTH_ZERO:
        return float(subgroup_order)
    if case == BoundCase.MIXED:
        return 2 * sqrt(p)
    ratio = subgroup_order / (p - 1)
    return ratio + (1 - ratio) * sqrt(p)


def kloosterman_e_bound(p: int, subgroup_order: int, e: int, case: BoundCase) -> float:
    """Bounds on K_e(G, a, b) = sum over G of psi(a x + b x^-e)."""
    if e < 1:
        raise ParameterError(f"e = {e} must be positive")
    _check_order(p, subgroup_order)
    _no_degenerate(case)
    ratio = subgroup_order / (p - 1)
    if case == BoundCase.B_ONLY:
        return ratio + (e - ratio) * sqrt(p)
    if case == BoundCase.MIXED:
        return (e + 1) * sqrt(p)
    return kloosterman_bound(p, subgroup_order, case)


# Walsh spectra of power residue S-boxes


def walsh_bound_inverse(p: int, m: int, case: BoundCase) -> float:
    """x^(q-2) * T((x/q)_m)."""
    _check_divisor(p, m)
    _no_degenerate(case)
    return {
        BoundCase.BOTH_ZERO: float(p),
        BoundCase.A_ONLY: 0.0,
        BoundCase.B_ONLY: (m - 1) * sqrt(p) + 2,
        BoundCase.MIXED: 2 * m * sqrt(p) + 1,
    }[case]


def walsh_bound_scaled_inverse(p: int, m: int, e: int, case: BoundCase) -> float:
    """x^(e(q-2)) * T((x/q)_m); the mixed case carries no additive constant."""
    if e <= 1 or m <= 1:
        raise ParameterError(f"scaled inverse bound needs e, m > 1 (e = {e}, m = {m})")
    _check_divisor(p, m)
    _no_degenerate(case)
    return {
        BoundCase.BOTH_ZERO: float(p),
        BoundCase.A_ONLY: 0.0,
        BoundCase.B_ONLY: (e * m - 1) * sqrt(p) + 2,
        BoundCase.MIXED: (e + 1) * m * sqrt(p),
    }[case]


def walsh_bound_general(p: int, m: int, d: int, case: BoundCase) -> float:
    """x^d * T((x/q)_m) for 1 < dm < p and gcd(d, p) = 1."""
    _check_divisor(p, m)
    _no_degenerate(case)
    if not 1 < d * m < p:
        raise ParameterError(f"need 1 < d*m < p, got d*m = {d * m}, p = {p}")
    if gcd(d, p) != 1:
        raise ParameterError(f"gcd(d, p) = {gcd(d, p)} for d = {d}, p = {p}")
    if case == BoundCase.BOTH_ZERO:
        return float(p)
    if case == BoundCase.A_ONLY:
        return 0.0
    return (d * m - 1) * sqrt(p) + 2


def walsh_bound_d1(p: int, m: int, case: BoundCase) -> float:
    """x * T((x/q)_m) with T injective; degenerate pairs get the larger estimate."""
    _check_divisor(p, m)
    if case == BoundCase.BOTH_ZERO:
        return float(p)
    if case == BoundCase.A_ONLY:
        return 0.0
    if case == BoundCase.MIXED_DEGENERATE:
        return (p - 1) / m + (m - 2 + 1 / m) * sqrt(p) + 2 - 1 / m
    return (m - 1) * sqrt(p) + 2


def grassi_bound(p: int, d_plus: int, d_minus: int, case: BoundCase) -> float:
    """Two-exponent Legendre S-box."""
    _no_degenerate(case)
    if p % 2 == 0:
        raise ParameterError(f"p = {p} must be odd")
    if gcd(d_plus * d_minus, p) != 1:
        raise ParameterError(f"gcd(d+ * d-, p) != 1 for p = {p}")
    if 2 * d_plus >= p or 2 * d_minus >= p:
        raise ParameterError(f"need 2 d+- < p, got ({d_plus}, {d_minus}) at p = {p}")
    if case == BoundCase.BOTH_ZERO:
        return float(p)
    if case == BoundCase.A_ONLY:
        return 0.0
    return (d_plus + d_minus - 1) * sqrt(p) + 2


def polynomial_residue_bound(p: int, m: int, degree: int, case: BoundCase) -> float:
    """f(x) * T((x/q)_m), the general-d estimate with deg f in place of d."""
    # linear f leaves degenerate mixed pairs the estimate does not cover
    if degree < 2:
        raise ParameterError(f"polynomial bound needs deg f >= 2, got deg f = {degree}")
    return walsh_bound_general(p, m, degree, case)


# Weil-type estimates


def weil_bound(deg_f: int, p: int) -> float:
    """|sum psi(f(x))| <= (deg f - 1) sqrt(p)."""
    if deg_f < 1:
        raise ParameterError(f"deg f = {deg_f} must be positive")
    if gcd(deg_f, p) != 1:
        raise ParameterError(f"gcd(deg f, p) != 1 for deg f = {deg_f}, p = {p}")
    return (deg_f - 1) * sqrt(p)


def weil_rational_bound(deg_F: int, deg_G: int, s: int, p: int) -> float:
    """Rational argument F/G, s the number of distinct roots of G."""
    if s < 0 or deg_F < 0 or deg_G < 0:
        raise ParameterError("degrees and root count must be nonnegative")
    if deg_F > deg_G:
        s_star, delta = s + 1, 0
    else:
        s_star, delta = s, 1
    return max(0.0, (max(deg_F, deg_G) + s_star - 2) * sqrt(p) + delta)


# Reference values


def conjecture_and_corr_bounds(
    p: int, n: Optional[int] = None, m: Optional[int] = None
) -> Tuple[float, Optional[float]]:
    """4 sqrt(p) and, given n or m = 2^n, the correlation estimate 2^(n+2) / sqrt(p)."""
    if n is None and m is not None:
        if m < 1 or m & (m - 1):
            raise ParameterError(f"m = {m} is not a power of two")
        n = int(log2(m))
    corr = 2 ** (n + 2) / sqrt(p) if n is not None else None
    return 4 * sqrt(p), corr


def reference_bounds(
    p: int,
    n: Optional[int] = None,
    d: Optional[int] = None,
    d_plus: Optional[int] = None,
    d_minus: Optional[int] = None,
) -> ReferenceBounds:
    conjecture, polocolo = conjecture_and_corr_bounds(p, n=n)
    root = sqrt(p)
    return ReferenceBounds(
        p=p,
        conjecture=conjecture,
        proven_kloosterman=2 * root,
        polocolo_correlation=polocolo,
        grendel_correlation=2 * d / root if d is not None else None,
        grendel_degenerate_correlation=0.5 + 1 / (2 * root) + 1 / p,
        grassi_correlation=(d_plus + d_minus) / root
        if d_plus is not None and d_minus is not None
        else None,
    )


# Reports


def _value(
    case: BoundCase, raw: float, formula: str, trivial: float, informative: bool = True
) -> BoundValue:
    if case == BoundCase.BOTH_ZERO:
        # exact value, not an estimate
        return BoundValue(case=case, value=raw, raw=raw, formula=formula, informative=True)
    return BoundValue(
        case=case,
        value=min(raw, trivial),
        raw=raw,
        formula=formula,
        informative=informative and raw < trivial,
    )


def _trivial_cases(cases, trivial: float) -> Dict[BoundCase, BoundValue]:
    return {
        case: _value(case, trivial, "trivial" if case != BoundCase.BOTH_ZERO else "q", trivial, False)
        for case in cases
    }


def _walsh_dispatch(
    spec: SBoxSpec, p: int
) -> Tuple[Callable[[BoundCase], float], Dict[BoundCase, str], bool]:
    """Bound function, formula labels and the general-d informativeness flag."""
    if isinstance(spec, TwoExponentLegendreSpec):
        dp, dm = spec.d_plus, spec.d_minus
        label = "(d+ + d- - 1)sqrt(q)+2"
        return (
            lambda case: grassi_bound(p, dp, dm, case),
            {BoundCase.B_ONLY: label, BoundCase.MIXED: label},
            True,
        )
    if isinstance(spec, PolynomialResidueSpec):
        deg, m = spec.degree, spec.m
        label = "(deg f*m-1)sqrt(q)+2"
        return (
            lambda case: polynomial_residue_bound(p, m, deg, case),
            {BoundCase.B_ONLY: label, BoundCase.MIXED: label},
            deg * m < sqrt(p),
        )

    m = spec.m
    kind = spec.d_spec.kind
    e = spec.d_spec.value
    if kind == "inverse" or (kind == "scaled_inverse" and e == 1):
        return (
            lambda case: walsh_bound_inverse(p, m, case),
            {BoundCase.B_ONLY: "(m-1)sqrt(q)+2", BoundCase.MIXED: "2m*sqrt(q)+1"},
            True,
        )
    if kind == "scaled_inverse":
        return (
            lambda case: walsh_bound_scaled_inverse(p, m, e, case),
            {BoundCase.B_ONLY: "(em-1)sqrt(q)+2", BoundCase.MIXED: "(e+1)m*sqrt(q)"},
            True,
        )
    if e == 1:
        return (
            lambda case: walsh_bound_d1(p, m, case),
            {
                BoundCase.B_ONLY: "(m-1)sqrt(q)+2",
                BoundCase.MIXED: "(m-1)sqrt(q)+2",
                BoundCase.MIXED_DEGENERATE: "(q-1)/m+(m-2+1/m)sqrt(q)+2-1/m",
            },
            True,
        )
    return (
        lambda case: walsh_bound_general(p, m, e, case),
        {BoundCase.B_ONLY: "(dm-1)sqrt(q)+2", BoundCase.MIXED: "(dm-1)sqrt(q)+2"},
        e * m < sqrt(p),
    )


def bound_precondition(spec: SBoxSpec, ctx: FieldContext) -> Optional[str]:
    """Why no closed-form bound applies to spec over F_p, or None if one does."""
    bound, _, _ = _walsh_dispatch(spec, ctx.p)
    try:
        bound(BoundCase.MIXED)
    except ParameterError as e:
        return str(e)
    return None


def walsh_bound_report(
    spec: SBoxSpec,
    ctx: FieldContext,
    permutation: Optional[bool] = None,
    profile: Optional[TableProfile] = None,
) -> BoundReport:
    """Every case bound for one S-box over F_p, capped at the trivial bound p.

    Preconditions that fail make every case fall back to the trivial bound,
    flagged non-informative.
    """
    p = ctx.p
    trivial = float(p)
    d1 = isinstance(spec, PowerResidueSpec) and spec.d_spec.kind == "literal" and spec.d_spec.value == 1
    cases = WALSH_CASES + ((BoundCase.MIXED_DEGENERATE,) if d1 else ())

    bound, formulas, small_dm = _walsh_dispatch(spec, p)
    if d1 and profile is not None and not profile.injective:
        logger.info(f"T is not injective for {spec.family} at p={p}; using trivial bounds")
        values = _trivial_cases(cases, trivial)
    else:
        try:
            values = {}
            for case in cases:
                formula = formulas.get(case, {BoundCase.BOTH_ZERO: "q", BoundCase.A_ONLY: "0"}.get(case))
                informative = small_dm or case not in (BoundCase.B_ONLY, BoundCase.MIXED)
                values[case] = _value(case, bound(case), formula, trivial, informative)
        except ParameterError as e:
            logger.info(f"No closed-form bound for {spec.family} at p={p}: {e}")
            values = _trivial_cases(cases, trivial)

    if permutation:
        values[BoundCase.B_ONLY] = _value(BoundCase.B_ONLY, 0.0, "permutation", trivial)

    return BoundReport(
        kind="walsh",
        family=spec.family,
        p=p,
        m=spec.m,
        d_spec=spec.d_label,
        trivial=trivial,
        cases=values,
    )


def kloosterman_bound_report(p: int, subgroup_order: int, e: int = 1) -> BoundReport:
    """Every case bound for K_e over the subgroup of the given order, capped at |G|."""
    _check_order(p, subgroup_order)
    trivial = float(subgroup_order)
    values: Dict[BoundCase, BoundValue] = {}
    for case in KLOOSTERMAN_CASES:
        if e == 1:
            raw = kloosterman_bound(p, subgroup_order, case)
        else:
            raw = kloosterman_e_bound(p, subgroup_order, e, case)
        formula = {
            BoundCase.BOTH_ZERO: "|G|",
            BoundCase.A_ONLY: "|G|/(q-1)+(1-|G|/(q-1))sqrt(q)",
            BoundCase.B_ONLY: "|G|/(q-1)+(e-|G|/(q-1))sqrt(q)" if e > 1 else "|G|/(q-1)+(1-|G|/(q-1))sqrt(q)",
            BoundCase.MIXED: f"{e + 1}sqrt(q)",
        }[case]
        values[case] = _value(case, raw, formula, trivial)

    if e > 1 and gcd(e, p - 1) == 1:
        # x -> x^-e permutes G, so the b-only sum is the a-only one
        values[BoundCase.B_ONLY] = _value(
            BoundCase.B_ONLY,
            kloosterman_bound(p, subgroup_order, BoundCase.A_ONLY),
            "gcd(e,q-1)=1",
            trivial,
        )

    return BoundReport(
        kind="kloosterman",
        family="kloosterman",
        p=p,
        m=(p - 1) // subgroup_order,
        d_spec="-" if e == 1 else f"x^-{e}",
        trivial=trivial,
        cases=values,
    )
