import cmath
from math import sqrt

import numpy as np
import pytest
from sympy import divisors, primerange

from src.utils.errors import ParameterError
from src.utils.field_core import find_generator, subgroup
from src.utils.models import BoundCase
from src.utils.sbox_families import make_named_family, random_table, sbox_eval
from src.utils.spectra import (
    AdditiveCharacter,
    ArgumentHistogram,
    char_sum,
    correlation,
    efficient_spectrum_check,
    histogram,
    kloosterman_orbit,
    kloosterman_orbit_check,
    kloosterman_point,
    kloosterman_spectrum,
    reduction_identity_check,
    restricted_reduction_check,
    walsh_point,
    walsh_point_restricted,
    walsh_spectrum,
)


def _direct(p: int, arguments) -> complex:
    return sum(cmath.exp(2j * cmath.pi * t / p) for t in arguments)


def _assert_same_maxima(left, right):
    assert set(left.cases) == set(right.cases)
    for case in left.cases:
        assert left.cases[case].max_abs == pytest.approx(right.cases[case].max_abs, abs=1e-6)


def test_character_table(character):
    chi = character(31)
    assert chi.table[0] == 1
    assert np.allclose(np.abs(chi.table), 1.0, atol=1e-12)
    rng = np.random.default_rng(0)
    for x, y in rng.integers(0, 31, size=(1000, 2)):
        assert abs(chi(x + y) - chi(x) * chi(y)) < 1e-9


def test_zero_twist_rejected(character):
    with pytest.raises(ParameterError):
        character(7, 14)


@pytest.mark.parametrize("p", [7, 31, 257])
def test_full_field_orthogonality(character, p):
    chi = character(p)
    x = np.arange(p)
    for a in range(1, p, max(1, p // 17)):
        assert abs(char_sum(histogram(a * x, p), chi)) < 1e-9 * p


def test_char_sum_examples(character):
    chi = character(7)
    assert abs(char_sum(histogram(range(7), 7), chi)) < 1e-9 * 7
    assert char_sum(histogram([0, 0, 0, 0], 7), chi) == pytest.approx(4 + 0j)
    value = char_sum(histogram([2, 6, 6], 7), chi)
    assert value == pytest.approx(_direct(7, [2, 6, 6]), abs=1e-12)
    assert abs(value) == pytest.approx(1.1816, abs=1e-4)


def test_char_sum_mismatched_modulus(character):
    with pytest.raises(ParameterError):
        char_sum(ArgumentHistogram(p=11, counts=np.zeros(11, dtype=np.int64)), character(7))


def test_walsh_point_trivial_cases(ctx13, character):
    chi = character(13)
    spec = make_named_family("power_residue", {"d": "inverse", "m": 4}, ctx13)
    assert walsh_point(spec, 0, 0, chi, ctx13).value == pytest.approx(13 + 0j)
    assert walsh_point(spec, 5, 0, chi, ctx13).abs_value < 1e-9 * 13


def test_walsh_point_matches_direct_sum(ctx7, character):
    chi = character(7)
    spec = make_named_family("polocolo", {"n": 1}, ctx7)
    entry = walsh_point(spec, 2, 3, chi, ctx7)
    expected = _direct(7, [(2 * x + 3 * sbox_eval(spec, x, ctx7)) % 7 for x in range(7)])
    assert entry.value == pytest.approx(expected, abs=1e-9)
    assert entry.abs_value <= 2 * 2 * sqrt(7) + 1


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 101, 257])
def test_degenerate_value_over_squares(character, p):
    ctx = find_generator(p)
    chi = character(p)
    squares = subgroup(ctx, 2).elements
    for a in (1, 2, p - 1):
        entry = walsh_point_restricted(1, squares, a, -a, chi, ctx)
        assert entry.re == pytest.approx((p - 1) / 2, abs=1e-9)
        assert abs(entry.im) < 1e-9


def test_restricted_sum_edge_cases(ctx7, character):
    chi = character(7)
    assert walsh_point_restricted(3, [], 1, 1, chi, ctx7).abs_value == 0
    entry = walsh_point_restricted(3, [1, 2, 4], 1, 0, chi, ctx7)
    assert entry.value == pytest.approx(_direct(7, [1, 2, 4]), abs=1e-12)


def test_kloosterman_point(ctx7, character):
    chi = character(7)
    G = subgroup(ctx7, 2)
    assert kloosterman_point(G, 0, 0, chi).value == pytest.approx(3 + 0j)
    entry = kloosterman_point(G, 1, 1, chi)
    assert entry.value == pytest.approx(_direct(7, [2, 6, 6]), abs=1e-12)
    assert entry.abs_value == pytest.approx(1.1816, abs=1e-4)


@pytest.mark.parametrize("p, m, e", [(7, 2, 1), (13, 3, 1), (13, 4, 2), (31, 5, 1), (31, 2, 3)])
def test_kloosterman_reduced_matches_brute_force(character, p, m, e):
    ctx = find_generator(p)
    chi = character(p)
    G = subgroup(ctx, m)
    reduced = kloosterman_spectrum(G, chi, e)
    brute = kloosterman_spectrum(G, chi, e, "brute_force")
    _assert_same_maxima(reduced, brute)
    assert reduced.sums_evaluated == (m + 1) * p
    assert reduced.cases[BoundCase.BOTH_ZERO].max_abs == pytest.approx(G.order)


@pytest.mark.parametrize("p", [13, 31, 61])
def test_kloosterman_one_sided_symmetry(character, p):
    ctx = find_generator(p)
    report = kloosterman_spectrum(subgroup(ctx, 2), character(p))
    assert report.cases[BoundCase.A_ONLY].max_abs == pytest.approx(
        report.cases[BoundCase.B_ONLY].max_abs, abs=1e-9
    )


def test_classical_kloosterman_weil_bound(character):
    ctx = find_generator(31)
    report = kloosterman_spectrum(subgroup(ctx, 1), character(31))
    assert report.cases[BoundCase.MIXED].max_abs <= 2 * sqrt(31) + 1e-6


def test_kloosterman_witness_reproduces_maximum(ctx13, character):
    chi = character(13)
    G = subgroup(ctx13, 2)
    report = kloosterman_spectrum(G, chi)
    for maximum in report.cases.values():
        entry = kloosterman_point(G, maximum.witness_a, maximum.witness_b, chi)
        assert entry.abs_value == pytest.approx(maximum.max_abs, abs=1e-6)


WALSH_CASES = [
    (31, "power_residue", {"d": 3, "m": 2}),
    (13, "power_residue", {"d": 1, "m": 2}),
    (13, "power_residue", {"d": 1, "m": 4}),
    (31, "power_residue", {"d": 1, "m": 3}),
    (13, "power_residue", {"d": "inverse", "m": 4}),
    (13, "shallue", {"m": 2, "a": 3}),
    (31, "scaled_inverse", {"e": 2, "m": 3}),
    (11, "grendel", {"d": 2}),
    (19, "shifted_legendre", {"d": 3, "a": 5}),
]


@pytest.mark.parametrize("p, name, params", WALSH_CASES)
def test_walsh_reduced_matches_brute_force(character, p, name, params):
    ctx = find_generator(p)
    chi = character(p)
    spec = make_named_family(name, params, ctx)
    _assert_same_maxima(walsh_spectrum(spec, chi, ctx), walsh_spectrum(spec, chi, ctx, "brute_force"))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_walsh_reduced_matches_brute_force_random_table(character, seed):
    ctx = find_generator(13)
    chi = character(13)
    spec = make_named_family(
        "power_residue", {"d": "inverse", "m": 4, "table": random_table(ctx, 4, seed)}, ctx
    )
    _assert_same_maxima(walsh_spectrum(spec, chi, ctx), walsh_spectrum(spec, chi, ctx, "brute_force"))


def test_walsh_witnesses_reproduce_maxima(character):
    ctx = find_generator(31)
    chi = character(31)
    spec = make_named_family("power_residue", {"d": 3, "m": 2}, ctx)
    report = walsh_spectrum(spec, chi, ctx)
    for maximum in report.cases.values():
        entry = walsh_point(spec, maximum.witness_a, maximum.witness_b, chi, ctx)
        assert entry.abs_value == pytest.approx(maximum.max_abs, abs=1e-6)


def test_walsh_twist_does_not_change_maxima():
    ctx = find_generator(13)
    spec = make_named_family("power_residue", {"d": "inverse", "m": 2}, ctx)
    base = walsh_spectrum(spec, AdditiveCharacter.create(13, 1), ctx)
    twisted = walsh_spectrum(spec, AdditiveCharacter.create(13, 5), ctx)
    _assert_same_maxima(base, twisted)


def test_permutation_has_vanishing_b_only_row(ctx11, character):
    spec = make_named_family("grendel", {"d": 2}, ctx11)
    report = walsh_spectrum(spec, character(11), ctx11)
    assert report.cases[BoundCase.B_ONLY].max_abs < 1e-6 * 11
    assert report.cases[BoundCase.A_ONLY].max_abs < 1e-6 * 11


@pytest.mark.parametrize("p", [13, 29, 61])
def test_d1_degenerate_case(character, p):
    ctx = find_generator(p)
    spec = make_named_family("grendel", {"d": 1}, ctx)
    report = walsh_spectrum(spec, character(p), ctx)
    assert BoundCase.MIXED_DEGENERATE in report.cases
    floor = (p - 1) / 2 + 1 - (1 + sqrt(p)) / 2
    assert report.cases[BoundCase.MIXED_DEGENERATE].max_abs >= floor - 1e-9
    assert report.proof_degenerate is not None
    assert report.table_profile is not None and report.table_profile.injective


def test_two_exponent_falls_back_to_brute_force(ctx13, character):
    spec = make_named_family("grassi_two_exponent", {"d_plus": 3, "d_minus": 5}, ctx13)
    report = walsh_spectrum(spec, character(13), ctx13)
    assert report.mode == "brute_force"
    assert report.sums_evaluated == 13 * 13


def test_brute_force_cap(ctx13, character):
    spec = make_named_family("grendel", {"d": 2}, ctx13)
    with pytest.raises(ParameterError):
        walsh_spectrum(spec, character(13), ctx13, "brute_force", brute_force_max_p=11)


def test_correlation(character):
    ctx = find_generator(13)
    spec = make_named_family("polocolo", {"n": 2}, ctx)
    report = walsh_spectrum(spec, character(13), ctx)
    assert correlation(report) == pytest.approx(report.cases[BoundCase.MIXED].max_abs / 13)
    assert correlation(report) <= 2**4 / sqrt(13)


@pytest.mark.parametrize("p, m, a, b", [(7, 2, 1, 1), (13, 4, 2, 5), (31, 3, 7, 11), (61, 4, 9, 2)])
def test_subgroup_reduction_identities(character, p, m, a, b):
    ctx = find_generator(p)
    chi = character(p)
    G = subgroup(ctx, m)
    assert reduction_identity_check(G, chi, a, b) < 1e-9
    assert reduction_identity_check(G, chi, a, b, e=2) < 1e-9
    assert restricted_reduction_check(3, G, chi, a, b) < 1e-9


def test_reduction_identities_on_random_tuples(character):
    rng = np.random.default_rng(2024)
    primes = list(primerange(5, 258))
    for _ in range(200):
        p = int(rng.choice(primes))
        m = int(rng.choice(divisors(p - 1)))
        a, b = (int(v) for v in rng.integers(1, p, size=2))
        d = int(rng.integers(1, 6))
        ctx = find_generator(p)
        chi = character(p)
        G = subgroup(ctx, m)
        case = f"p={p} m={m} a={a} b={b} d={d}"
        assert reduction_identity_check(G, chi, a, b) < 1e-9 * p, case
        assert reduction_identity_check(G, chi, a, b, e=2) < 1e-9 * p, case
        assert restricted_reduction_check(d, G, chi, a, b) < 1e-9 * p, case
        assert kloosterman_orbit_check(G, chi, a, b) < 1e-9 * p, case
        spec = make_named_family(
            "power_residue",
            {"d": "inverse", "m": m, "table": random_table(ctx, m, int(rng.integers(1000)))},
            ctx,
        )
        assert efficient_spectrum_check(spec, chi, ctx, a, b) < 1e-9 * p, case


def test_full_group_reduction_is_exact(ctx13, character):
    G = subgroup(ctx13, 1)
    assert reduction_identity_check(G, character(13), 4, 7) < 1e-9


def test_kloosterman_orbit_identity(character):
    rng = np.random.default_rng(5)
    for p, m in [(13, 4), (31, 5), (61, 4)]:
        ctx = find_generator(p)
        chi = character(p)
        G = subgroup(ctx, m)
        for a, b in rng.integers(1, p, size=(20, 2)):
            assert kloosterman_orbit_check(G, chi, int(a), int(b)) < 1e-9 * p
            assert kloosterman_orbit_check(G, chi, int(a), int(b), e=2) < 1e-9 * p


def test_kloosterman_orbit_representative(ctx7):
    G = subgroup(ctx7, 2)
    # 6 = 3^3 = g^(1*2 + 1)
    assert kloosterman_orbit(G, 6, 1) == (3, 2)


def test_efficient_spectrum_identity(character):
    rng = np.random.default_rng(9)
    for p, m, d in [(13, 4, "inverse"), (31, 3, 2), (61, 4, 1)]:
        ctx = find_generator(p)
        chi = character(p)
        spec = make_named_family("power_residue", {"d": d, "m": m}, ctx)
        randomized = make_named_family(
            "power_residue", {"d": d, "m": m, "table": random_table(ctx, m, 3)}, ctx
        )
        for a, b in rng.integers(1, p, size=(10, 2)):
            assert efficient_spectrum_check(spec, chi, ctx, int(a), int(b)) < 1e-9 * p
            assert efficient_spectrum_check(randomized, chi, ctx, int(a), int(b)) < 1e-9 * p
