from functools import lru_cache
from math import gcd
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from .config import MAX_VECTOR_P
from .errors import ConsistencyError, ParameterError
from .field_core import (
    check_index,
    log_table,
    mod_inv,
    mod_pow,
    power_residue,
    power_table,
    residue_subgroup,
    subgroup_mask,
)
from .logging import get_logger
from .models import (
    ExponentSpec,
    FieldContext,
    PermutationCheck,
    PolynomialResidueSpec,
    PowerResidueSpec,
    ResidueTable,
    SBoxSpec,
    TableProfile,
    TableValidation,
    TwoExponentLegendreSpec,
)

logger = get_logger(__name__)

TableSpecs = (PowerResidueSpec, PolynomialResidueSpec)


def validate_T(table: ResidueTable) -> TableValidation:
    """Check that T has exactly m entries and never vanishes."""
    if len(table.entries) != table.m:
        return TableValidation(
            ok=False,
            index=min(len(table.entries), table.m),
            reason=f"table has {len(table.entries)} entries, expected m = {table.m}",
        )
    for index, entry in enumerate(table.entries):
        if entry == 0:
            return TableValidation(
                ok=False, index=index, reason=f"T vanishes at index {index}"
            )
    return TableValidation(ok=True)


def identity_table(ctx: FieldContext, m: int) -> ResidueTable:
    """T = id on the order-m subgroup."""
    return ResidueTable(m=m, entries=residue_subgroup(ctx, m))


def shifted_table(ctx: FieldContext, m: int, a: int) -> ResidueTable:
    """T(y) = y + a."""
    return ResidueTable(
        m=m, entries=tuple((w + a) % ctx.p for w in residue_subgroup(ctx, m))
    )


def random_table(ctx: FieldContext, m: int, seed: int, index: int = 0) -> ResidueTable:
    """Uniformly random injective T with nonzero values, reproducible per (seed, p, m, index)."""
    check_index(ctx.p, m)
    rng = np.random.default_rng([seed, ctx.p, m, index])
    chosen = rng.choice(ctx.p - 1, size=m, replace=False) + 1
    return ResidueTable(m=m, entries=tuple(int(v) for v in chosen))


def explicit_table(ctx: FieldContext, m: int, entries: Sequence[int]) -> ResidueTable:
    return ResidueTable(m=m, entries=tuple(int(v) % ctx.p for v in entries))


def rotate_table(table: ResidueTable, j: int) -> ResidueTable:
    """T_j[r] = T[(r + j) mod m]: T composed with multiplication by w^j."""
    m = table.m
    return ResidueTable(
        m=m, entries=tuple(table.entries[(r + j) % m] for r in range(m))
    )


def residue_table_profile(table: ResidueTable, ctx: FieldContext) -> TableProfile:
    """Injectivity of T and which entries escape N_0."""
    mask = subgroup_mask(ctx, table.m)
    escaping = tuple(r for r, y in enumerate(table.entries) if not mask[y % ctx.p])
    return TableProfile(
        injective=len(set(table.entries)) == len(table.entries),
        in_subgroup=not escaping,
        escaping=escaping,
    )


def check_spec(spec: SBoxSpec, ctx: FieldContext) -> None:
    """Raise ParameterError unless spec is well defined over ctx."""
    p = ctx.p
    if isinstance(spec, TwoExponentLegendreSpec):
        if gcd(spec.d_plus * spec.d_minus, p) != 1:
            raise ParameterError(f"gcd(d+ * d-, p) != 1 for p = {p}")
        return
    check_index(p, spec.m)
    verdict = validate_T(spec.table)
    if not verdict.ok:
        raise ParameterError(f"invalid T: {verdict.reason}")
    for index, entry in enumerate(spec.table.entries):
        if not 0 < entry < p:
            raise ParameterError(f"T entry {entry} at index {index} is not in F_{p}^x")


def _table_entry(spec: Union[PowerResidueSpec, PolynomialResidueSpec], x: int, ctx: FieldContext) -> int:
    symbol = power_residue(x, spec.m, ctx)
    return spec.table.entries[residue_subgroup(ctx, spec.m).index(symbol)]


def _horner(coefficients: Sequence[int], x: int, p: int) -> int:
    acc = 0
    for c in reversed(coefficients):
        acc = (acc * x + c) % p
    return acc


def sbox_eval(spec: SBoxSpec, x: int, ctx: FieldContext) -> int:
    """S(x) straight from the defining formula."""
    check_spec(spec, ctx)
    p = ctx.p
    x %= p
    if x == 0:
        return 0
    if isinstance(spec, TwoExponentLegendreSpec):
        chi = power_residue(x, 2, ctx)
        total = mod_pow(x, spec.d_plus, p) * (1 + chi) + mod_pow(x, spec.d_minus, p) * (
            1 - chi
        )
        return total * mod_inv(2, p) % p
    if isinstance(spec, PolynomialResidueSpec):
        return _horner(spec.coefficients, x, p) * _table_entry(spec, x, ctx) % p
    d_eff = spec.d_spec.effective(p)
    return mod_pow(x, d_eff, p) * _table_entry(spec, x, ctx) % p


@lru_cache(maxsize=256)
def _cached_table(spec: SBoxSpec, ctx: FieldContext) -> np.ndarray:
    p = ctx.p
    logs = log_table(ctx)[1:]
    powers = power_table(ctx)
    table = np.zeros(p, dtype=np.int64)
    if isinstance(spec, TwoExponentLegendreSpec):
        plus = powers[(logs * spec.d_plus) % (p - 1)]
        minus = powers[(logs * spec.d_minus) % (p - 1)]
        table[1:] = np.where(logs % 2 == 0, plus, minus)
    else:
        entries = np.asarray(spec.table.entries, dtype=np.int64)
        if isinstance(spec, PolynomialResidueSpec):
            xs = np.arange(1, p, dtype=np.int64)
            values = np.zeros(p - 1, dtype=np.int64)
            for c in reversed(spec.coefficients):
                values = (values * xs + c) % p
        else:
            values = powers[(logs * spec.d_spec.effective(p)) % (p - 1)]
        table[1:] = values * entries[logs % spec.m] % p
    table.flags.writeable = False
    return table


def sbox_table(spec: SBoxSpec, ctx: FieldContext) -> np.ndarray:
    """table[x] = S(x) for every x in F_p (read-only)."""
    check_spec(spec, ctx)
    if ctx.p >= MAX_VECTOR_P:
        raise ParameterError(f"p = {ctx.p} is too large for table enumeration")
    return _cached_table(spec, ctx)


def is_grendel_shaped(spec: SBoxSpec, ctx: FieldContext) -> bool:
    """S(x) = x^d * (x/p)_2 with a literal d."""
    return (
        isinstance(spec, PowerResidueSpec)
        and spec.m == 2
        and spec.d_spec.kind == "literal"
        and spec.table.entries == identity_table(ctx, 2).entries
    )


def is_permutation(spec: SBoxSpec, ctx: FieldContext) -> PermutationCheck:
    """Exhaustive bijectivity, cross-checked against the family's gcd criterion."""
    table = sbox_table(spec, ctx)
    bijective = np.unique(table).size == ctx.p
    p = ctx.p

    if is_grendel_shaped(spec, ctx):
        criterion = gcd(spec.d_spec.value + (p - 1) // 2, p - 1) == 1
        if criterion != bijective:
            raise ConsistencyError(
                f"gcd criterion ({criterion}) disagrees with exhaustive check "
                f"({bijective}) for d = {spec.d_spec.value}, p = {p}"
            )
        return PermutationCheck(
            bijective=bijective, criterion=criterion, criterion_name="gcd(d+(p-1)/2, p-1)=1"
        )

    if isinstance(spec, TwoExponentLegendreSpec):
        criterion = gcd(spec.d_plus, p - 1) == 1 and gcd(spec.d_minus, p - 1) == 1
        # sufficient, not necessary
        if criterion and not bijective:
            raise ConsistencyError(
                f"gcd(d+-, p-1) = 1 but S is not bijective for p = {p}"
            )
        return PermutationCheck(
            bijective=bijective, criterion=criterion, criterion_name="gcd(d+-, p-1)=1"
        )

    return PermutationCheck(bijective=bijective)


def _int_param(params: Dict[str, Any], key: str, family: str) -> int:
    value = params.get(key)
    if value is None:
        raise ParameterError(f"family '{family}' needs parameter '{key}'")
    return int(value)


def _table_param(
    params: Dict[str, Any], ctx: FieldContext, m: int
) -> ResidueTable:
    table = params.get("table")
    if table is None:
        return identity_table(ctx, m)
    if isinstance(table, ResidueTable):
        return table
    return explicit_table(ctx, m, table)


def _require_outside_image(a: int, ctx: FieldContext, m: int, family: str) -> None:
    if a % ctx.p in residue_subgroup(ctx, m):
        raise ParameterError(
            f"{family}: a = {a} lies in the image of the {m}-th power residue symbol"
        )


def make_named_family(name: str, params: Dict[str, Any], ctx: FieldContext) -> SBoxSpec:
    """Assemble one of the named S-box families as a spec over ctx."""
    try:
        spec = _assemble_family(name, params, ctx)
    except ValidationError as e:
        raise ParameterError(f"invalid parameters for '{name}': {e}") from e
    check_spec(spec, ctx)
    return spec


def _assemble_family(name: str, params: Dict[str, Any], ctx: FieldContext) -> SBoxSpec:
    p = ctx.p
    if name == "grassi_two_exponent":
        spec: SBoxSpec = TwoExponentLegendreSpec(
            d_plus=_int_param(params, "d_plus", name),
            d_minus=_int_param(params, "d_minus", name),
        )
    elif name == "shallue":
        m = _int_param(params, "m", name)
        check_index(p, m)
        a = _int_param(params, "a", name)
        _require_outside_image(a, ctx, m, name)
        spec = PowerResidueSpec(
            family=name, d_spec=ExponentSpec(value=1), m=m, table=shifted_table(ctx, m, a)
        )
    elif name == "grendel":
        spec = PowerResidueSpec(
            family=name,
            d_spec=ExponentSpec(value=_int_param(params, "d", name)),
            m=2,
            table=identity_table(ctx, 2),
        )
    elif name == "shifted_legendre":
        a = _int_param(params, "a", name)
        _require_outside_image(a, ctx, 2, name)
        spec = PowerResidueSpec(
            family=name,
            d_spec=ExponentSpec(value=_int_param(params, "d", name)),
            m=2,
            table=shifted_table(ctx, 2, a),
        )
    elif name == "polocolo":
        if params.get("n") is not None:
            m = 2 ** _int_param(params, "n", name)
        else:
            m = _int_param(params, "m", name)
        if m < 2 or m & (m - 1):
            raise ParameterError(f"polocolo: m = {m} is not a power of two")
        check_index(p, m)
        spec = PowerResidueSpec(
            family=name,
            d_spec=ExponentSpec(kind="inverse"),
            m=m,
            table=_table_param(params, ctx, m),
        )
    elif name == "scaled_inverse":
        m = _int_param(params, "m", name)
        check_index(p, m)
        spec = PowerResidueSpec(
            family=name,
            d_spec=ExponentSpec(kind="scaled_inverse", value=_int_param(params, "e", name)),
            m=m,
            table=_table_param(params, ctx, m),
        )
    elif name == "power_residue":
        m = _int_param(params, "m", name)
        check_index(p, m)
        d = params.get("d")
        if d is None:
            raise ParameterError("family 'power_residue' needs parameter 'd'")
        d_spec = (
            ExponentSpec(kind="inverse")
            if str(d) == "inverse"
            else ExponentSpec(value=int(d))
        )
        spec = PowerResidueSpec(
            family=name, d_spec=d_spec, m=m, table=_table_param(params, ctx, m)
        )
    elif name == "polynomial_residue":
        m = _int_param(params, "m", name)
        check_index(p, m)
        coefficients = tuple(int(c) % p for c in params.get("f") or ())
        while coefficients and coefficients[-1] == 0:
            coefficients = coefficients[:-1]
        if not coefficients:
            raise ParameterError("polynomial_residue: f must be a nonzero polynomial")
        spec = PolynomialResidueSpec(
            family=name,
            coefficients=coefficients,
            m=m,
            table=_table_param(params, ctx, m),
        )
    else:
        raise ParameterError(f"unknown S-box family '{name}'")
    return spec


def literal_exponent(spec: SBoxSpec) -> Optional[int]:
    """d for literal-exponent power residue specs, else None."""
    if isinstance(spec, PowerResidueSpec) and spec.d_spec.kind == "literal":
        return spec.d_spec.value
    return None
