from math import gcd

import pytest
from sympy import primerange

from src.utils.errors import ParameterError
from src.utils.field_core import find_generator
from src.utils.models import ResidueTable
from src.utils.sbox_families import (
    identity_table,
    is_permutation,
    make_named_family,
    random_table,
    residue_table_profile,
    rotate_table,
    sbox_eval,
    sbox_table,
    shifted_table,
    validate_T,
)


def test_inverse_legendre_point(ctx7):
    spec = make_named_family("power_residue", {"d": "inverse", "m": 2}, ctx7)
    assert sbox_eval(spec, 3, ctx7) == 2
    assert sbox_eval(spec, 0, ctx7) == 0
    assert spec.d_label == "q-2"


def test_two_exponent_legendre_points(ctx7):
    spec = make_named_family("grassi_two_exponent", {"d_plus": 3, "d_minus": 5}, ctx7)
    assert sbox_eval(spec, 3, ctx7) == 5
    assert sbox_eval(spec, 2, ctx7) == 1
    assert sbox_eval(spec, 0, ctx7) == 0


def test_grendel_permutation_criterion(ctx11):
    square_ish = make_named_family("grendel", {"d": 2}, ctx11)
    assert square_ish.table.entries == (1, 10)
    check = is_permutation(square_ish, ctx11)
    assert check.bijective and check.criterion

    cube_ish = make_named_family("grendel", {"d": 3}, ctx11)
    check = is_permutation(cube_ish, ctx11)
    assert not check.bijective and check.criterion is False


@pytest.mark.parametrize("p", list(primerange(3, 258)))
def test_grendel_criterion_matches_exhaustive_check(p):
    ctx = find_generator(p)
    for d in range(1, 8):
        spec = make_named_family("grendel", {"d": d}, ctx)
        check = is_permutation(spec, ctx)
        assert check.bijective == check.criterion


@pytest.mark.parametrize("d_plus, d_minus", [(3, 5), (5, 7)])
def test_two_exponent_bijectivity_on_every_prime(d_plus, d_minus):
    # odd exponents: x^d+ must permute the squares and x^d- the non-squares
    for p in primerange(11, 258):
        ctx = find_generator(int(p))
        spec = make_named_family(
            "grassi_two_exponent", {"d_plus": d_plus, "d_minus": d_minus}, ctx
        )
        half = (p - 1) // 2
        expected = gcd(d_plus, half) == 1 and gcd(d_minus, half) == 1
        assert is_permutation(spec, ctx).bijective == expected, p


def test_invalid_family_parameters_raise_parameter_error(ctx13):
    with pytest.raises(ParameterError, match="grendel"):
        make_named_family("grendel", {"d": 0}, ctx13)
    with pytest.raises(ParameterError):
        make_named_family("grassi_two_exponent", {"d_plus": 0, "d_minus": 5}, ctx13)


@pytest.mark.parametrize(
    "name, params",
    [
        ("power_residue", {"d": "inverse", "m": 4}),
        ("power_residue", {"d": 3, "m": 3}),
        ("scaled_inverse", {"e": 2, "m": 2}),
        ("shallue", {"m": 2, "a": 3}),
        ("grassi_two_exponent", {"d_plus": 3, "d_minus": 5}),
        ("polynomial_residue", {"m": 2, "f": (1, 0, 1)}),
        ("polocolo", {"n": 2}),
    ],
)
def test_table_matches_pointwise_evaluation(ctx13, name, params):
    spec = make_named_family(name, params, ctx13)
    table = sbox_table(spec, ctx13)
    assert table.tolist() == [sbox_eval(spec, x, ctx13) for x in range(13)]
    assert not table.flags.writeable


def test_shift_in_image_is_rejected(ctx7, ctx11):
    with pytest.raises(ParameterError):
        make_named_family("shifted_legendre", {"d": 3, "a": 1}, ctx11)
    with pytest.raises(ParameterError):
        make_named_family("shifted_legendre", {"d": 3, "a": -1}, ctx11)
    with pytest.raises(ParameterError):
        make_named_family("shallue", {"m": 2, "a": 1}, ctx7)
    spec = make_named_family("shallue", {"m": 2, "a": 3}, ctx7)
    assert spec.table.entries == (4, 2)


def test_polocolo_needs_power_of_two(ctx7, ctx13):
    with pytest.raises(ParameterError, match="power of two"):
        make_named_family("polocolo", {"m": 3}, ctx7)
    spec = make_named_family("polocolo", {"n": 2}, ctx13)
    assert spec.m == 4
    with pytest.raises(ParameterError):
        make_named_family("polocolo", {"n": 2}, ctx7)


def test_unknown_family(ctx7):
    with pytest.raises(ParameterError, match="unknown"):
        make_named_family("aes", {}, ctx7)


def test_validate_T():
    assert validate_T(ResidueTable(m=2, entries=(1, 6))).ok
    verdict = validate_T(ResidueTable(m=2, entries=(1, 0)))
    assert not verdict.ok and verdict.index == 1
    assert not validate_T(ResidueTable(m=3, entries=(1, 2))).ok


def test_zero_table_entry_rejected(ctx7):
    with pytest.raises(ParameterError):
        make_named_family("power_residue", {"d": 1, "m": 2, "table": (3, 7)}, ctx7)


def test_random_table_is_reproducible_and_injective(ctx13):
    first = random_table(ctx13, 4, seed=11, index=0)
    assert first == random_table(ctx13, 4, seed=11, index=0)
    assert len(set(first.entries)) == 4
    assert all(1 <= v < 13 for v in first.entries)


def test_rotate_table():
    table = ResidueTable(m=3, entries=(5, 7, 9))
    assert rotate_table(table, 1).entries == (7, 9, 5)
    assert rotate_table(table, 3).entries == (5, 7, 9)


def test_table_profile(ctx7, ctx13):
    profile = residue_table_profile(identity_table(ctx7, 2), ctx7)
    assert profile.injective
    assert not profile.in_subgroup
    assert profile.escaping == (1,)

    # entries (3, 10, 1, 7); N_0 = {1, 3, 9}
    profile = residue_table_profile(shifted_table(ctx13, 4, 2), ctx13)
    assert profile.injective
    assert profile.escaping == (1, 3)


def test_shifted_table(ctx7):
    assert shifted_table(ctx7, 2, 3).entries == (4, 2)
