from enum import Enum
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator
from sympy import isprime

from .config import (
    BRUTE_FORCE_MAX_P,
    DEFAULT_TWIST,
    DEFAULT_WORKERS,
    MAX_FIELD_P,
    OUTPUT_DIR,
)

# A canonical residue in [0, p - 1]; the modulus travels separately.
FieldElement = Annotated[int, Field(ge=0)]

SpectrumMode = Literal["reduced", "brute_force"]
SweepMode = Literal["reduced", "brute_force", "cross_check"]
TableMode = Literal["identity", "shifted", "random", "explicit"]

KLOOSTERMAN_FAMILY = "kloosterman"
SBOX_FAMILY_NAMES = (
    "power_residue",
    "shallue",
    "grendel",
    "shifted_legendre",
    "polocolo",
    "scaled_inverse",
    "grassi_two_exponent",
    "polynomial_residue",
)


class FieldContext(BaseModel):
    """A prime field F_p with a certified primitive root."""

    model_config = ConfigDict(frozen=True)

    p: int = Field(..., ge=3, description="Prime modulus.")
    g: int = Field(..., ge=2, description="Primitive root of p.")
    factors: Tuple[int, ...] = Field(
        ..., description="Distinct prime factors of p - 1, ascending."
    )

    @model_validator(mode="after")
    def _check_generator(self) -> "FieldContext":
        if self.p >= MAX_FIELD_P or not isprime(self.p):
            raise ValueError(f"{self.p} is not a prime below 2^64")
        rest = self.p - 1
        for prime in self.factors:
            if rest % prime:
                raise ValueError(f"{prime} does not divide p - 1 = {self.p - 1}")
            while rest % prime == 0:
                rest //= prime
        if rest != 1:
            raise ValueError(f"factors {self.factors} do not cover p - 1")
        for prime in self.factors:
            if pow(self.g, (self.p - 1) // prime, self.p) == 1:
                raise ValueError(f"{self.g} is not a primitive root of {self.p}")
        return self

    @property
    def order(self) -> int:
        """Order of the multiplicative group."""
        return self.p - 1


class SubgroupSpec(BaseModel):
    """The index-m subgroup N_0 = <g^m> of F_p^x."""

    model_config = ConfigDict(frozen=True)

    ctx: FieldContext
    m: int = Field(..., ge=1, description="Index of the subgroup.")
    order: int = Field(..., ge=1, description="(p - 1) / m.")
    elements: Tuple[int, ...] = Field(..., description="Members, ascending.")

    @model_validator(mode="after")
    def _check_shape(self) -> "SubgroupSpec":
        if self.m * self.order != self.ctx.p - 1 or len(self.elements) != self.order:
            raise ValueError("subgroup order does not match its index")
        return self


class Coset(BaseModel):
    """N_r = g^r * N_0."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(..., ge=0, description="Shift index.")
    m: int = Field(..., ge=1)
    elements: Tuple[int, ...] = Field(..., description="Members, ascending.")


class ResidueTable(BaseModel):
    """T evaluated on the order-m subgroup, indexed by coset shift r."""

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1)
    entries: Tuple[int, ...] = Field(
        ..., description="entries[r] = T(g^(r * (p - 1) / m))."
    )


class ExponentSpec(BaseModel):
    """Exponent descriptor, symbolic until a prime binds it."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["literal", "inverse", "scaled_inverse"] = "literal"
    value: int = Field(1, ge=1, description="d for literal, e for scaled_inverse.")

    def effective(self, p: int) -> int:
        """Exponent acting on nonzero inputs of F_p."""
        if self.kind == "inverse":
            return p - 2
        if self.kind == "scaled_inverse":
            return (self.value * (p - 2)) % (p - 1)
        return self.value

    @property
    def label(self) -> str:
        if self.kind == "inverse":
            return "q-2"
        if self.kind == "scaled_inverse":
            return f"{self.value}(q-2)"
        return str(self.value)


class PowerResidueSpec(BaseModel):
    """S(x) = x^d * T((x/p)_m)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["power_residue"] = "power_residue"
    family: str = "power_residue"
    d_spec: ExponentSpec
    m: int = Field(..., ge=1)
    table: ResidueTable

    @model_validator(mode="after")
    def _check_table(self) -> "PowerResidueSpec":
        if self.table.m != self.m:
            raise ValueError(f"table index {self.table.m} differs from m = {self.m}")
        return self

    @property
    def d_label(self) -> str:
        return self.d_spec.label


class TwoExponentLegendreSpec(BaseModel):
    """S(x) = (x^d+ (1 + chi(x)) + x^d- (1 - chi(x))) / 2."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["two_exponent_legendre"] = "two_exponent_legendre"
    family: str = "grassi_two_exponent"
    d_plus: int = Field(..., gt=1)
    d_minus: int = Field(..., gt=1)

    @property
    def m(self) -> int:
        return 2

    @property
    def d_label(self) -> str:
        return f"{self.d_plus}/{self.d_minus}"


class PolynomialResidueSpec(BaseModel):
    """S(x) = f(x) * T((x/p)_m) for an arbitrary polynomial f."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["polynomial_residue"] = "polynomial_residue"
    family: str = "polynomial_residue"
    coefficients: Tuple[int, ...] = Field(
        ..., min_length=1, description="Coefficients of f, constant term first."
    )
    m: int = Field(..., ge=1)
    table: ResidueTable

    @model_validator(mode="after")
    def _check_shape(self) -> "PolynomialResidueSpec":
        if self.coefficients[-1] == 0:
            raise ValueError("leading coefficient of f must be nonzero")
        if self.table.m != self.m:
            raise ValueError(f"table index {self.table.m} differs from m = {self.m}")
        return self

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def d_label(self) -> str:
        return f"deg{self.degree}"


SBoxSpec = Annotated[
    Union[PowerResidueSpec, TwoExponentLegendreSpec, PolynomialResidueSpec],
    Field(discriminator="kind"),
]


class TableValidation(BaseModel):
    """Outcome of checking a residue table."""

    ok: bool
    index: Optional[int] = Field(None, description="First offending index.")
    reason: Optional[str] = None


class TableProfile(BaseModel):
    """Structure of T relevant to the d = 1 estimate."""

    injective: bool
    in_subgroup: bool = Field(..., description="Every entry lies in N_0.")
    escaping: Tuple[int, ...] = Field((), description="Indices with entry outside N_0.")


class PermutationCheck(BaseModel):
    """Exhaustive bijectivity plus the family's closed-form criterion if any."""

    bijective: bool
    criterion: Optional[bool] = None
    criterion_name: Optional[str] = None


class BoundCase(str, Enum):
    """Case split shared by every spectrum report and bound table."""

    BOTH_ZERO = "both_zero"
    A_ONLY = "a_only"
    B_ONLY = "b_only"
    MIXED = "mixed"
    MIXED_DEGENERATE = "mixed_degenerate"

    @property
    def rank(self) -> int:
        return list(BoundCase).index(self)


class SpectrumEntry(BaseModel):
    """One Walsh or Kloosterman value."""

    model_config = ConfigDict(frozen=True)

    a: int
    b: int
    re: float
    im: float
    abs_value: float = Field(..., ge=0.0)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class CaseMaximum(BaseModel):
    """Largest |value| within one case together with a witness (a, b)."""

    model_config = ConfigDict(frozen=True)

    case: BoundCase
    max_abs: float
    witness_a: int
    witness_b: int


class SpectrumReport(BaseModel):
    """Per-case maxima of a Walsh or Kloosterman spectrum."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["walsh", "kloosterman"]
    family: str
    p: int
    m: int
    d_spec: str
    mode: SpectrumMode
    twist: int
    cases: Dict[BoundCase, CaseMaximum]
    correlation_max: float
    sums_evaluated: int
    subgroup_order: Optional[int] = None
    proof_degenerate: Optional[CaseMaximum] = Field(
        None, description="d = 1 only: maximum over mixed points with -a/b in T's image."
    )
    table_profile: Optional[TableProfile] = None


class BoundValue(BaseModel):
    """One certified bound."""

    model_config = ConfigDict(frozen=True)

    case: BoundCase
    value: float = Field(..., ge=0.0, description="min(closed-form bound, trivial bound).")
    raw: float = Field(..., ge=0.0, description="Closed-form bound before capping.")
    formula: str
    informative: bool


class BoundReport(BaseModel):
    """Evaluated theoretical bounds for one family instance and prime."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["walsh", "kloosterman"]
    family: str
    p: int
    m: int
    d_spec: str
    trivial: float
    cases: Dict[BoundCase, BoundValue]


class ReferenceBounds(BaseModel):
    """Comparison columns: the designers' conjecture and correlation bounds."""

    p: int
    conjecture: float = Field(..., description="4 * sqrt(p).")
    proven_kloosterman: float = Field(..., description="2 * sqrt(p).")
    polocolo_correlation: Optional[float] = Field(None, description="2^(n+2) / sqrt(p).")
    grendel_correlation: Optional[float] = Field(None, description="2d / sqrt(p).")
    grendel_degenerate_correlation: float = Field(
        ..., description="1/2 + 1/(2 sqrt(p)) + 1/p."
    )
    grassi_correlation: Optional[float] = Field(
        None, description="(d+ + d-) / sqrt(p)."
    )


class FamilyDescriptor(BaseModel):
    """A family name plus parameter grids, as written in configs and on the CLI."""

    name: str
    d: List[str] = Field(default_factory=list, description="Integers or 'inverse'.")
    m: List[int] = Field(default_factory=list)
    n: List[int] = Field(default_factory=list)
    e: List[int] = Field(default_factory=list)
    a: Optional[int] = None
    d_plus: List[int] = Field(default_factory=list)
    d_minus: List[int] = Field(default_factory=list)
    f: Tuple[int, ...] = ()
    t: TableMode = "identity"
    table: Tuple[int, ...] = ()
    instances: int = Field(1, ge=1, description="Random tables per (p, m).")

    @model_validator(mode="after")
    def _check_name(self) -> "FamilyDescriptor":
        if self.name != KLOOSTERMAN_FAMILY and self.name not in SBOX_FAMILY_NAMES:
            valid = ", ".join((KLOOSTERMAN_FAMILY,) + SBOX_FAMILY_NAMES)
            raise ValueError(f"unknown family '{self.name}', expected one of {valid}")
        if self.t == "explicit" and not self.table:
            raise ValueError("explicit T mode needs a table")
        return self


class FamilyInstance(BaseModel):
    """One point of a family's parameter grid."""

    model_config = ConfigDict(frozen=True)

    name: str
    label: str
    d: Optional[str] = None
    m: Optional[int] = None
    n: Optional[int] = None
    e: int = 1
    a: Optional[int] = None
    d_plus: Optional[int] = None
    d_minus: Optional[int] = None
    f: Tuple[int, ...] = ()
    t: TableMode = "identity"
    table: Tuple[int, ...] = ()
    t_index: int = 0


class SweepConfig(BaseModel):
    """Declarative description of a sweep."""

    name: str = "sweep"
    prime_range: Tuple[int, int]
    families: List[FamilyDescriptor] = Field(..., min_length=1)
    mode: SweepMode = "reduced"
    twist: int = DEFAULT_TWIST
    workers: int = Field(DEFAULT_WORKERS, ge=1)
    seed: Optional[int] = None
    output_dir: Path = Path(OUTPUT_DIR)
    formats: List[Literal["csv", "json"]] = Field(["csv", "json"], min_length=1)
    brute_force_max_p: int = BRUTE_FORCE_MAX_P

    @model_validator(mode="after")
    def _check_ranges(self) -> "SweepConfig":
        lo, hi = self.prime_range
        if lo < 3 or hi < lo:
            raise ValueError(f"prime range {lo}:{hi} must satisfy 3 <= lo <= hi")
        for family in self.families:
            if family.t == "random" and self.seed is None:
                raise ValueError(f"family '{family.name}' uses random T without a seed")
        return self


class SweepJob(BaseModel):
    """One (family instance, prime) unit of work."""

    model_config = ConfigDict(frozen=True)

    instance: FamilyInstance
    p: int
    mode: SweepMode
    twist: int
    seed: Optional[int] = None
    brute_force_max_p: int = BRUTE_FORCE_MAX_P


class SweepRow(BaseModel):
    """One CSV record."""

    model_config = ConfigDict(frozen=True)

    family: str
    p: int
    m: int
    d_spec: str
    case: BoundCase
    max_abs: float
    witness_a: int
    witness_b: int
    bound: float
    ratio: float
    informative: bool
    violation: bool = False


class SkipRecord(BaseModel):
    """A (family instance, prime) pair that was not evaluated, with the reason."""

    family: str
    p: int
    reason: str


class JobResult(BaseModel):
    """Everything one job hands back to the fold."""

    rows: List[SweepRow] = Field(default_factory=list)
    skip: Optional[SkipRecord] = None
    cross_mismatches: int = 0


class SweepSummary(BaseModel):
    """Aggregate counts written next to the CSV."""

    name: str
    mode: SweepMode
    seed: Optional[int]
    prime_range: Tuple[int, int]
    jobs: int
    evaluated: int
    skipped: int
    rows: int
    certified: int
    violations: int
    non_informative: int
    cross_mismatches: int
    family_max_ratio: Dict[str, float]
    kloosterman_tightness: Optional[float] = Field(
        None, description="max |K| / (2 sqrt(p)) over m = 2 Kloosterman rows."
    )
    skips: List[SkipRecord] = Field(default_factory=list)


class CheckFamilyRequest(BaseModel):
    """Request model for a single certified report."""

    family: str = Field(..., description="Family descriptor, e.g. 'grendel:d=3'.")
    p: int = Field(..., ge=3, description="Prime modulus.")
    mode: SweepMode = Field("reduced", description="reduced, brute_force or cross_check.")
    twist: int = Field(DEFAULT_TWIST, description="Character twist c.")
    seed: Optional[int] = Field(None, description="Seed for random T tables.")


class KloostermanRequest(BaseModel):
    """Request model for a Kloosterman spectrum over a subgroup."""

    p: int = Field(..., ge=3, description="Prime modulus.")
    m: int = Field(..., ge=1, description="Subgroup index.")
    e: int = Field(1, ge=1, description="Exponent of the inverse term.")
    mode: SpectrumMode = Field("reduced", description="reduced or brute_force.")
    twist: int = Field(DEFAULT_TWIST, description="Character twist c.")


class BoundsRequest(BaseModel):
    """Request model for closed-form bounds without evaluating sums."""

    family: str = Field(..., description="Family descriptor.")
    p: int = Field(..., ge=3, description="Prime modulus.")
    seed: Optional[int] = Field(None, description="Seed for random T tables.")


class SieveRequest(BaseModel):
    """Request model for listing primes."""

    lo: int = Field(..., ge=2, description="Lower end, inclusive.")
    hi: int = Field(..., ge=2, description="Upper end, inclusive.")


class ErrorResponse(BaseModel):
    """Response model for errors."""

    error: str = Field(..., description="The error message.")
    details: Optional[str] = Field(
        None, description="Additional details about the error."
    )
    success: bool = Field(
        False, description="Indicates if the operation was successful."
    )


class CheckOutcome(BaseModel):
    """Rendered check result together with what the CLI needs for its exit code."""

    text: str
    violations: int = 0
    cross_mismatches: int = 0
    error: Optional[ErrorResponse] = None
