"""Walsh and Kloosterman sums over prime fields.

Every sum is evaluated the same way: build the exact integer histogram of
the character argument over the summation domain, then take one dot
product against the unit-circle table of the additive character. Spectra
batch many (a, b) pairs into a single counts matrix.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from .config import BRUTE_FORCE_MAX_P, CHUNK_ELEMENTS, DEFAULT_TWIST, MAX_VECTOR_P
from .errors import ParameterError
from .field_core import (
    exponent_table,
    inverse_table,
    log_table,
    power_table,
    subgroup_mask,
)
from .logging import get_logger
from .models import (
    BoundCase,
    CaseMaximum,
    FieldContext,
    PowerResidueSpec,
    SBoxSpec,
    SpectrumEntry,
    SpectrumMode,
    SpectrumReport,
    SubgroupSpec,
)
from .sbox_families import (
    literal_exponent,
    residue_table_profile,
    rotate_table,
    sbox_table,
)

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class AdditiveCharacter:
    """psi(x) = exp(2 pi i c x / p), tabulated on F_p."""

    p: int
    c: int
    table: np.ndarray

    @classmethod
    def create(cls, p: int, c: int = DEFAULT_TWIST) -> "AdditiveCharacter":
        if c % p == 0:
            raise ParameterError(f"twist c = {c} is zero modulo {p}")
        if p >= MAX_VECTOR_P:
            raise ParameterError(f"p = {p} is too large for a character table")
        k = (np.arange(p, dtype=np.int64) * (c % p)) % p
        table = np.exp(2j * np.pi * k / p)
        table[0] = 1.0
        table.flags.writeable = False
        return cls(p=p, c=c % p, table=table)

    def __call__(self, x: int) -> complex:
        return complex(self.table[x % self.p])


@dataclass(frozen=True, eq=False)
class ArgumentHistogram:
    """counts[t] = number of domain points whose argument is t mod p."""

    p: int
    counts: np.ndarray

    @property
    def size(self) -> int:
        return int(self.counts.sum())


def histogram(arguments: Union[np.ndarray, Iterable[int]], p: int) -> ArgumentHistogram:
    if not isinstance(arguments, np.ndarray):
        arguments = np.fromiter(arguments, dtype=np.int64)
    values = arguments.astype(np.int64, copy=False) % p
    return ArgumentHistogram(p=p, counts=np.bincount(values, minlength=p))


def char_sum(hist: ArgumentHistogram, chi: AdditiveCharacter) -> complex:
    """sum_t counts[t] * psi(t)."""
    if hist.p != chi.p:
        raise ParameterError(f"histogram over F_{hist.p} paired with a character of F_{chi.p}")
    return complex(np.dot(hist.counts.astype(np.float64), chi.table))


def _entry(a: int, b: int, value: complex) -> SpectrumEntry:
    return SpectrumEntry(
        a=int(a), b=int(b), re=value.real, im=value.imag, abs_value=abs(value)
    )


def _pair_sums(
    a_vals: np.ndarray,
    b_vals: np.ndarray,
    u: np.ndarray,
    v: np.ndarray,
    chi: AdditiveCharacter,
) -> np.ndarray:
    """sum_x psi(a * u[x] + b * v[x]) for every pair (a_vals[i], b_vals[i])."""
    p = chi.p
    total = a_vals.size
    if u.size == 0:
        return np.zeros(total, dtype=np.complex128)
    rows = max(1, CHUNK_ELEMENTS // max(u.size, p))
    offsets = np.arange(rows, dtype=np.int64)[:, None] * p
    out = np.empty(total, dtype=np.complex128)
    for start in range(0, total, rows):
        a = a_vals[start : start + rows, None]
        b = b_vals[start : start + rows, None]
        k = a.shape[0]
        args = (a * u[None, :] + b * v[None, :]) % p + offsets[:k]
        counts = np.bincount(args.ravel(), minlength=k * p).reshape(k, p)
        out[start : start + k] = counts @ chi.table
    return out


class _CaseFold:
    """Running per-case maxima; earlier witnesses win ties."""

    def __init__(self) -> None:
        self.best: Dict[BoundCase, CaseMaximum] = {}

    def update(self, case: BoundCase, values: np.ndarray, a, b) -> None:
        if values.size == 0:
            return
        a = np.broadcast_to(np.asarray(a, dtype=np.int64), values.shape)
        b = np.broadcast_to(np.asarray(b, dtype=np.int64), values.shape)
        i = int(np.argmax(values))
        current = self.best.get(case)
        if current is None or values[i] > current.max_abs:
            self.best[case] = CaseMaximum(
                case=case, max_abs=float(values[i]), witness_a=int(a[i]), witness_b=int(b[i])
            )

    def ordered(self) -> Dict[BoundCase, CaseMaximum]:
        return {case: self.best[case] for case in sorted(self.best, key=lambda c: c.rank)}


def correlation_from_cases(cases: Dict[BoundCase, CaseMaximum], p: int) -> float:
    mixed = [
        cases[c].max_abs
        for c in (BoundCase.MIXED, BoundCase.MIXED_DEGENERATE)
        if c in cases
    ]
    return max(mixed) / p if mixed else 0.0


def correlation(report: SpectrumReport) -> float:
    """Largest |value| over a * b != 0, divided by p."""
    return correlation_from_cases(report.cases, report.p)


# Single points


def walsh_point(
    spec: SBoxSpec, a: int, b: int, chi: AdditiveCharacter, ctx: FieldContext
) -> SpectrumEntry:
    """W_S(a, b) = sum over F_p of psi(a x + b S(x))."""
    p = ctx.p
    a, b = a % p, b % p
    s = sbox_table(spec, ctx)
    x = np.arange(p, dtype=np.int64)
    return _entry(a, b, char_sum(histogram((a * x + b * s) % p, p), chi))


def walsh_point_restricted(
    f: Union[int, SBoxSpec],
    X: Iterable[int],
    a: int,
    b: int,
    chi: AdditiveCharacter,
    ctx: FieldContext,
) -> SpectrumEntry:
    """Walsh sum restricted to X; f is either an exponent d (f = x^d) or an S-box."""
    p = ctx.p
    a, b = a % p, b % p
    points = np.fromiter((int(x) % p for x in X), dtype=np.int64)
    if points.size == 0:
        return _entry(a, b, 0j)
    values = exponent_table(ctx, f) if isinstance(f, int) else sbox_table(f, ctx)
    return _entry(a, b, char_sum(histogram((a * points + b * values[points]) % p, p), chi))


def kloosterman_point(
    G: SubgroupSpec, a: int, b: int, chi: AdditiveCharacter, e: int = 1
) -> SpectrumEntry:
    """K_e(G, a, b) = sum over G of psi(a x + b x^-e)."""
    ctx = G.ctx
    p = ctx.p
    a, b = a % p, b % p
    x = np.asarray(G.elements, dtype=np.int64)
    inv = exponent_table(ctx, -e)[x]
    return _entry(a, b, char_sum(histogram((a * x + b * inv) % p, p), chi))


# Kloosterman spectra


def _kloosterman_label(e: int) -> str:
    return "-" if e == 1 else f"x^-{e}"


def _kloosterman_rows(
    a_rows: List[int], u: np.ndarray, v: np.ndarray, chi: AdditiveCharacter, fold: _CaseFold
) -> int:
    p = chi.p
    b_all = np.arange(p, dtype=np.int64)
    for a in a_rows:
        row = np.abs(_pair_sums(np.full(p, a, dtype=np.int64), b_all, u, v, chi))
        if a == 0:
            fold.update(BoundCase.BOTH_ZERO, row[:1], 0, 0)
            fold.update(BoundCase.B_ONLY, row[1:], 0, b_all[1:])
        else:
            fold.update(BoundCase.A_ONLY, row[:1], a, 0)
            fold.update(BoundCase.MIXED, row[1:], a, b_all[1:])
    return len(a_rows) * p


def kloosterman_spectrum(
    G: SubgroupSpec,
    chi: AdditiveCharacter,
    e: int = 1,
    mode: SpectrumMode = "reduced",
    brute_force_max_p: int = BRUTE_FORCE_MAX_P,
) -> SpectrumReport:
    """Per-case maxima of K_e(G, a, b) over F_p x F_p.

    Reduced mode evaluates only a in {0, 1, g, ..., g^(m-1)}: writing
    a = g^(km + r), the substitution y = g^(km) x permutes G and gives
    K_e(a, b) = K_e(g^r, b g^(e k m)), so each a-row is a permutation of
    the row of g^r. Witnesses are reported in those reduced coordinates.
    """
    ctx = G.ctx
    p = ctx.p
    if e < 1:
        raise ParameterError(f"Kloosterman exponent e = {e} must be positive")
    if p >= MAX_VECTOR_P:
        raise ParameterError(f"p = {p} is too large for spectrum enumeration")
    u = np.asarray(G.elements, dtype=np.int64)
    v = exponent_table(ctx, -e)[u]
    fold = _CaseFold()

    if mode == "brute_force":
        if p > brute_force_max_p:
            raise ParameterError(
                f"brute force capped at p <= {brute_force_max_p}, got {p}"
            )
        a_rows = list(range(p))
    else:
        powers = power_table(ctx)
        a_rows = [0] + [int(powers[r]) for r in range(G.m)]
    evaluated = _kloosterman_rows(a_rows, u, v, chi, fold)
    cases = fold.ordered()
    logger.debug(f"Kloosterman spectrum p={p} m={G.m} e={e} mode={mode}: {evaluated} sums")

    return SpectrumReport(
        kind="kloosterman",
        family="kloosterman",
        p=p,
        m=G.m,
        d_spec=_kloosterman_label(e),
        mode=mode,
        twist=chi.c,
        cases=cases,
        correlation_max=correlation_from_cases(cases, p),
        sums_evaluated=evaluated,
        subgroup_order=G.order,
    )


# Walsh spectra


def _rotation_classes(spec: PowerResidueSpec, p: int) -> List[int]:
    """Rotations j of T up to scalar multiples: T_j = lam * T_i gives W_{S_j}(1, b) = W_{S_i}(1, lam b)."""
    entries = spec.table.entries
    m = spec.m
    reps: List[int] = []
    for j in range(m):
        rotated = [entries[(r + j) % m] for r in range(m)]
        duplicate = False
        for i in reps:
            base = [entries[(r + i) % m] for r in range(m)]
            lam = rotated[0] * pow(base[0], -1, p) % p
            if all(rotated[r] == lam * base[r] % p for r in range(m)):
                duplicate = True
                break
        if not duplicate:
            reps.append(j)
    return reps


class _DegenerateSplit:
    """d = 1 classifier: a pair is degenerate when -a/b lies in N_0 or in T's image.

    N_0 alone is not enough. For p = 3 mod 4, m = 2 and T = id, the pair a = b has
    -a/b = -1 outside N_0, yet a x + b x T(x) vanishes on the non-squares.
    """

    def __init__(self, spec: PowerResidueSpec, ctx: FieldContext):
        p = ctx.p
        self.inverses = inverse_table(ctx)
        self.n0 = subgroup_mask(ctx, spec.m)
        self.image = np.zeros(p, dtype=bool)
        self.image[np.asarray(spec.table.entries, dtype=np.int64) % p] = True
        self.p = p

    def targets(self, a, b: np.ndarray) -> np.ndarray:
        return (-np.asarray(a, dtype=np.int64) * self.inverses[b]) % self.p

    def classify(self, a, b: np.ndarray):
        t = self.targets(a, b)
        proof = self.image[t]
        return proof | self.n0[t], proof


def _fold_mixed(
    fold: _CaseFold,
    proof_fold: Optional[_CaseFold],
    split: Optional[_DegenerateSplit],
    values: np.ndarray,
    a,
    b: np.ndarray,
    classify_a,
    classify_b: np.ndarray,
) -> None:
    if split is None:
        fold.update(BoundCase.MIXED, values, a, b)
        return
    degenerate, proof = split.classify(classify_a, classify_b)
    a_arr = np.broadcast_to(np.asarray(a, dtype=np.int64), values.shape)
    fold.update(BoundCase.MIXED, values[~degenerate], a_arr[~degenerate], b[~degenerate])
    fold.update(
        BoundCase.MIXED_DEGENERATE, values[degenerate], a_arr[degenerate], b[degenerate]
    )
    proof_fold.update(BoundCase.MIXED_DEGENERATE, values[proof], a_arr[proof], b[proof])


def walsh_row(
    spec: SBoxSpec, a: int, chi: AdditiveCharacter, ctx: FieldContext
) -> np.ndarray:
    """|W_S(a, b)| for every b in F_p."""
    p = ctx.p
    x = np.arange(p, dtype=np.int64)
    b_all = np.arange(p, dtype=np.int64)
    return np.abs(_pair_sums(np.full(p, a % p, dtype=np.int64), b_all, x, sbox_table(spec, ctx), chi))


def _walsh_reduced(spec: PowerResidueSpec, chi, ctx, fold, proof_fold, split) -> int:
    p = ctx.p
    d = spec.d_spec.effective(p)
    b_all = np.arange(p, dtype=np.int64)
    powers = power_table(ctx)

    row = walsh_row(spec, 0, chi, ctx)
    fold.update(BoundCase.BOTH_ZERO, row[:1], 0, 0)
    fold.update(BoundCase.B_ONLY, row[1:], 0, b_all[1:])
    evaluated = p

    # d = 1 classification is not invariant under the scalar collapse
    classes = list(range(spec.m)) if split is not None else _rotation_classes(spec, p)
    for j in classes:
        rotated = spec.model_copy(update={"table": rotate_table(spec.table, j)})
        row = walsh_row(rotated, 1, chi, ctx)
        evaluated += p
        # a^-1 = g^j; W_S(a, b) = W_{S_j}(1, b a^-d)
        a = int(powers[(-j) % (p - 1)])
        b_orig = b_all * pow(a, d, p) % p
        fold.update(BoundCase.A_ONLY, row[:1], a, 0)
        # for d = 1, -a/b = -1/b'
        _fold_mixed(fold, proof_fold, split, row[1:], a, b_orig[1:], 1, b_all[1:])
    return evaluated


def _walsh_brute(spec: SBoxSpec, chi, ctx, fold, proof_fold, split) -> int:
    p = ctx.p
    b_all = np.arange(p, dtype=np.int64)
    for a in range(p):
        row = walsh_row(spec, a, chi, ctx)
        if a == 0:
            fold.update(BoundCase.BOTH_ZERO, row[:1], 0, 0)
            fold.update(BoundCase.B_ONLY, row[1:], 0, b_all[1:])
        else:
            fold.update(BoundCase.A_ONLY, row[:1], a, 0)
            _fold_mixed(fold, proof_fold, split, row[1:], a, b_all[1:], a, b_all[1:])
    return p * p


def walsh_spectrum(
    spec: SBoxSpec,
    chi: AdditiveCharacter,
    ctx: FieldContext,
    mode: SpectrumMode = "reduced",
    brute_force_max_p: int = BRUTE_FORCE_MAX_P,
) -> SpectrumReport:
    """Per-case maxima of |W_S(a, b)| over F_p x F_p.

    Reduced mode handles power residue specs: with a^-1 = g^j,
    S(a^-1 y) = a^-d S_j(y) where T_j is T rotated by j, so every a-row is
    a permutation of the a = 1 row of one of at most m rotated S-boxes.
    Other specs fall back to brute force.
    """
    p = ctx.p
    if chi.p != p:
        raise ParameterError(f"character over F_{chi.p} used with F_{p}")
    if mode == "reduced" and not isinstance(spec, PowerResidueSpec):
        logger.warning(
            f"No reduced enumeration for {spec.family} ({spec.kind}); using brute force at p={p}"
        )
        mode = "brute_force"
    if mode == "brute_force" and p > brute_force_max_p:
        raise ParameterError(f"brute force capped at p <= {brute_force_max_p}, got {p}")

    split = None
    profile = None
    proof_fold = None
    if literal_exponent(spec) == 1:
        split = _DegenerateSplit(spec, ctx)
        profile = residue_table_profile(spec.table, ctx)
        proof_fold = _CaseFold()

    fold = _CaseFold()
    if mode == "reduced":
        evaluated = _walsh_reduced(spec, chi, ctx, fold, proof_fold, split)
    else:
        evaluated = _walsh_brute(spec, chi, ctx, fold, proof_fold, split)
    cases = fold.ordered()
    logger.debug(
        f"Walsh spectrum {spec.family} p={p} m={spec.m} d={spec.d_label} mode={mode}: {evaluated} sums"
    )

    return SpectrumReport(
        kind="walsh",
        family=spec.family,
        p=p,
        m=spec.m,
        d_spec=spec.d_label,
        mode=mode,
        twist=chi.c,
        cases=cases,
        correlation_max=correlation_from_cases(cases, p),
        sums_evaluated=evaluated,
        subgroup_order=(p - 1) // spec.m,
        proof_degenerate=proof_fold.best.get(BoundCase.MIXED_DEGENERATE) if proof_fold else None,
        table_profile=profile,
    )


# Identities


def reduction_identity_check(
    G: SubgroupSpec, chi: AdditiveCharacter, a: int, b: int, e: int = 1
) -> float:
    """|K_e(G, a, b) - (|G|/(p-1)) sum over F_p^x of psi(a x^m + b x^(-e m))|."""
    ctx = G.ctx
    p = ctx.p
    lhs = kloosterman_point(G, a, b, chi, e).value
    x = np.arange(1, p, dtype=np.int64)
    lifted = exponent_table(ctx, G.m)[x]
    args = (a % p * lifted + b % p * exponent_table(ctx, -e)[lifted]) % p
    rhs = G.order / (p - 1) * char_sum(histogram(args, p), chi)
    return abs(lhs - rhs)


def restricted_reduction_check(
    d: int, G: SubgroupSpec, chi: AdditiveCharacter, a: int, b: int
) -> float:
    """Same identity for f = x^d: sum over G against the lifted sum over F_p^x."""
    ctx = G.ctx
    p = ctx.p
    lhs = walsh_point_restricted(d, G.elements, a, b, chi, ctx).value
    x = np.arange(1, p, dtype=np.int64)
    lifted = exponent_table(ctx, G.m)[x]
    args = (a % p * lifted + b % p * exponent_table(ctx, d)[lifted]) % p
    rhs = G.order / (p - 1) * char_sum(histogram(args, p), chi)
    return abs(lhs - rhs)


def kloosterman_orbit(G: SubgroupSpec, a: int, b: int, e: int = 1) -> tuple[int, int]:
    """Reduced coordinates (g^r, b g^(e k m)) of (a, b) with a = g^(km + r) != 0."""
    ctx = G.ctx
    p = ctx.p
    a %= p
    if a == 0:
        raise ParameterError("a = 0 has no orbit representative")
    log_a = int(log_table(ctx)[a])
    k, r = divmod(log_a, G.m)
    return pow(ctx.g, r, p), b * pow(ctx.g, e * k * G.m, p) % p


def kloosterman_orbit_check(
    G: SubgroupSpec, chi: AdditiveCharacter, a: int, b: int, e: int = 1
) -> float:
    a_r, b_r = kloosterman_orbit(G, a, b, e)
    return abs(
        kloosterman_point(G, a, b, chi, e).value - kloosterman_point(G, a_r, b_r, chi, e).value
    )


def efficient_spectrum_check(
    spec: PowerResidueSpec, chi: AdditiveCharacter, ctx: FieldContext, a: int, b: int
) -> float:
    """|W_S(a, b) - W_S(1, b a^-d chi_m(a^-1))| for T = id up to scale, else against W_{S_j}(1, b a^-d)."""
    p = ctx.p
    a %= p
    if a == 0:
        raise ParameterError("the reduction needs a != 0")
    d = spec.d_spec.effective(p)
    j = int(log_table(ctx)[pow(a, -1, p)]) % spec.m
    b_prime = b * pow(pow(a, d, p), -1, p) % p
    entries = spec.table.entries
    rotated = rotate_table(spec.table, j)
    lam = rotated.entries[0] * pow(entries[0], -1, p) % p
    if all(rotated.entries[r] == lam * entries[r] % p for r in range(spec.m)):
        rhs = walsh_point(spec, 1, b_prime * lam, chi, ctx).value
    else:
        rhs = walsh_point(spec.model_copy(update={"table": rotated}), 1, b_prime, chi, ctx).value
    return abs(walsh_point(spec, a, b, chi, ctx).value - rhs)
