"""Arithmetic in F_p, primitive roots, power residues, subgroups and cosets.

Every function here is pure; tables are cached per field and returned
read-only so they can be shared by any number of callers.
"""

from functools import lru_cache
from typing import Iterable

import numpy as np
from sympy import isprime, primefactors

from .config import MAX_FIELD_P
from .errors import ParameterError
from .logging import get_logger
from .models import Coset, FieldContext, SubgroupSpec

logger = get_logger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def check_prime(p: int) -> None:
    """Raise unless p is a prime with 3 <= p < 2^64."""
    if p < 3 or p >= MAX_FIELD_P or not isprime(p):
        raise ParameterError(f"{p} is not a prime in [3, 2^64)")


def check_index(p: int, m: int) -> None:
    """Raise unless m is a positive divisor of p - 1."""
    if m < 1 or (p - 1) % m:
        raise ParameterError(f"m = {m} does not divide p - 1 = {p - 1}")


def mod_pow(x: int, e: int, p: int) -> int:
    """x^e mod p by square-and-multiply."""
    if e < 0:
        raise ParameterError(f"negative exponent {e}; use mod_inv first")
    return pow(x % p, e, p)


def mod_inv(x: int, p: int) -> int:
    """Multiplicative inverse of x modulo p."""
    x %= p
    if x == 0:
        raise ParameterError("no inverse of zero")
    return pow(x, -1, p)


def is_primitive_root(g: int, p: int, factors: Iterable[int]) -> bool:
    """g generates F_p^x iff g^((p-1)/l) != 1 for every prime l | p - 1."""
    g %= p
    return g != 0 and all(pow(g, (p - 1) // prime, p) != 1 for prime in factors)


@lru_cache(maxsize=None)
def find_generator(p: int) -> FieldContext:
    """Smallest primitive root of p, with the factorisation of p - 1."""
    check_prime(p)
    factors = tuple(primefactors(p - 1))
    for g in range(2, p):
        if is_primitive_root(g, p, factors):
            logger.debug(f"Primitive root of {p}: g = {g}, p - 1 factors {factors}")
            return FieldContext(p=p, g=g, factors=factors)
    raise ParameterError(f"no primitive root found for {p}")


def power_residue(x: int, m: int, ctx: FieldContext) -> int:
    """m-th power residue symbol x^((p-1)/m); maps 0 to 0."""
    check_index(ctx.p, m)
    x %= ctx.p
    if x == 0:
        return 0
    return pow(x, (ctx.p - 1) // m, ctx.p)


def residue_subgroup(ctx: FieldContext, m: int) -> tuple[int, ...]:
    """The order-m subgroup {w^r} with w = g^((p-1)/m), listed by r."""
    check_index(ctx.p, m)
    w = pow(ctx.g, (ctx.p - 1) // m, ctx.p)
    return tuple(pow(w, r, ctx.p) for r in range(m))


@lru_cache(maxsize=None)
def subgroup(ctx: FieldContext, m: int) -> SubgroupSpec:
    """N_0 = <g^m>, the subgroup of index m and order (p - 1) / m."""
    check_index(ctx.p, m)
    order = (ctx.p - 1) // m
    step = pow(ctx.g, m, ctx.p)
    elements = []
    y = 1
    for _ in range(order):
        elements.append(y)
        y = y * step % ctx.p
    return SubgroupSpec(ctx=ctx, m=m, order=order, elements=tuple(sorted(elements)))


def coset(sub: SubgroupSpec, r: int) -> Coset:
    """N_r = g^r * N_0."""
    if not 0 <= r < sub.m:
        raise ParameterError(f"shift r = {r} outside [0, {sub.m - 1}]")
    p = sub.ctx.p
    shift = pow(sub.ctx.g, r, p)
    return Coset(
        r=r, m=sub.m, elements=tuple(sorted(shift * y % p for y in sub.elements))
    )


@lru_cache(maxsize=64)
def power_table(ctx: FieldContext) -> np.ndarray:
    """powers[k] = g^k for 0 <= k < p - 1."""
    powers = np.empty(ctx.p - 1, dtype=np.int64)
    y = 1
    for k in range(ctx.p - 1):
        powers[k] = y
        y = y * ctx.g % ctx.p
    return _frozen(powers)


@lru_cache(maxsize=64)
def log_table(ctx: FieldContext) -> np.ndarray:
    """logs[x] = k with g^k = x; logs[0] = -1."""
    logs = np.full(ctx.p, -1, dtype=np.int64)
    logs[power_table(ctx)] = np.arange(ctx.p - 1, dtype=np.int64)
    return _frozen(logs)


@lru_cache(maxsize=64)
def inverse_table(ctx: FieldContext) -> np.ndarray:
    """inverses[x] = x^-1 for x != 0; inverses[0] = 0."""
    powers = power_table(ctx)
    inverses = np.zeros(ctx.p, dtype=np.int64)
    k = np.arange(ctx.p - 1, dtype=np.int64)
    inverses[powers] = powers[(-k) % (ctx.p - 1)]
    return _frozen(inverses)


def exponent_table(ctx: FieldContext, e: int) -> np.ndarray:
    """x^e on every x in F_p for any integer e, with 0 mapped to 0."""
    logs = log_table(ctx)
    result = np.zeros(ctx.p, dtype=np.int64)
    nonzero = logs >= 0
    result[nonzero] = power_table(ctx)[(logs[nonzero] * (e % (ctx.p - 1))) % (ctx.p - 1)]
    return result


def coset_index(x: int, m: int, ctx: FieldContext) -> int:
    """The shift r with x in N_r."""
    check_index(ctx.p, m)
    x %= ctx.p
    if x == 0:
        raise ParameterError("0 lies in no coset")
    return int(log_table(ctx)[x]) % m


def subgroup_mask(ctx: FieldContext, m: int) -> np.ndarray:
    """Boolean membership table of N_0 over F_p."""
    check_index(ctx.p, m)
    logs = log_table(ctx)
    return (logs >= 0) & (logs % m == 0)
