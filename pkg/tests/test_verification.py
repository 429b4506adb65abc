import random
from fractions import Fraction
from itertools import product as iproduct

import pytest

from ncprob import (
    ComplexRational,
    ExplicitJointState,
    FreeElement,
    GeneratorSymbol,
    GramMatrix,
    GroupedWord,
    Letter,
    Polynomial,
    ProductSpace,
    TensorWord,
    TruncationError,
    Word,
    check_equivalence,
    check_freeness_cumulants,
    check_freeness_moments,
    check_positivity,
    joint_kappa,
    ldlt_psd,
    variance_factorization,
)
from ncprob.scalar import ComplexRational as CR
from ncprob.scalar import ONE, ZERO
from ncprob.verification import ProductStateView, centered_word_basis

from conftest import (
    measure_factor_state,
    random_product_space,
    semicircle_factor,
)


def scalar(x) -> ComplexRational:
    return ComplexRational.of(Fraction(x))


# -- counterexample joint states -----------------------------------------------


def nonfree_coupling():
    """phi(a deg b deg) = 1 although both letters are centered."""
    ga = GeneratorSymbol("a", selfadjoint=True)
    gb = GeneratorSymbol("b", selfadjoint=True)
    la, lb = Letter(ga, False, "A1"), Letter(gb, False, "A2")
    moments = {Word((la,)): ZERO, Word((lb,)): ZERO}
    for pair in iproduct((la, lb), repeat=2):
        moments[Word(pair)] = ONE
    return ExplicitJointState({"A1": [ga], "A2": [gb]}, 2, moments)


def classically_independent():
    """phi factorizes over letter counts: independence, but not freeness."""
    ga = GeneratorSymbol("a", selfadjoint=True)
    gb = GeneratorSymbol("b", selfadjoint=True)
    la, lb = Letter(ga, False, "A1"), Letter(gb, False, "A2")
    marginal = {0: ONE, 1: ZERO, 2: ONE, 3: ZERO, 4: ONE}  # Bernoulli(+-1, 1/2)
    moments = {}
    for n in range(1, 5):
        for tup in iproduct((la, lb), repeat=n):
            counts = {"A1": 0, "A2": 0}
            for l in tup:
                counts[l.factor] += 1
            moments[Word(tup)] = marginal[counts["A1"]] * marginal[counts["A2"]]
    return ExplicitJointState({"A1": [ga], "A2": [gb]}, 4, moments)


# -- freeness checks -------------------------------------------------------------


def test_constructed_space_is_free(two_semicircles):
    r_m = check_freeness_moments(two_semicircles, 4)
    r_c = check_freeness_cumulants(two_semicircles, 4)
    assert r_m.ok and r_c.ok
    assert r_m.checked_words > 0 and r_c.checked_words > 0
    assert check_equivalence(two_semicircles, 4)


def test_single_factor_is_vacuously_free(rng):
    space = random_product_space(rng, 1, 4)
    r_c = check_freeness_cumulants(space, 4)
    assert r_c.ok and r_c.checked_words == 0  # no mixed tuples exist
    r_m = check_freeness_moments(space, 4)
    assert r_m.ok  # single centered slots all have phi = 0
    assert check_equivalence(space, 4)


def test_nonfree_coupling_detected():
    joint = nonfree_coupling()
    r_m = check_freeness_moments(joint, 2)
    assert not r_m.ok
    assert ("(a)° (b)°", ONE) in r_m.violations
    r_c = check_freeness_cumulants(joint, 2)
    assert not r_c.ok
    assert ("a b", ONE) in r_c.violations
    assert check_equivalence(joint, 2)  # both sides fail together


def test_classical_independence_is_not_freeness():
    joint = classically_independent()
    la = joint.factor_letters("A1")[0]
    lb = joint.factor_letters("A2")[0]
    # mixed fourth cumulant: only 1_4 contributes, phi(abab) = 1
    assert joint_kappa(joint, (la, lb, la, lb)) == ONE
    r_c = check_freeness_cumulants(joint, 4)
    assert not r_c.ok
    assert ("a b a b", ONE) in r_c.violations
    assert check_equivalence(joint, 4)


def test_perturbed_product_fails_both_ways(two_semicircles):
    # copy the constructed joint moments, then set one alternating moment to 1
    view = ProductStateView(two_semicircles)
    la = view.factor_letters("A1")[0]
    lb = view.factor_letters("A2")[0]
    moments = {}
    for n in range(1, 5):
        for tup in iproduct((la, lb), repeat=n):
            moments[Word(tup)] = view.phi_word(tup)
    # star-consistency forces phi(b a) = conj(phi(a b))
    moments[Word((la, lb))] = ONE
    moments[Word((lb, la))] = ONE
    ga = two_semicircles.factor_state("A1").generators[0]
    gb = two_semicircles.factor_state("A2").generators[0]
    joint = ExplicitJointState({"A1": [ga], "A2": [gb]}, 4, moments)
    assert not check_freeness_moments(joint, 4).ok
    assert not check_freeness_cumulants(joint, 4).ok
    assert check_equivalence(joint, 4)


def test_report_serialization(two_semicircles):
    report = check_freeness_moments(two_semicircles, 3)
    data = report.to_json()
    assert data["mode"] == "moments"
    assert data["max_degree"] == 3
    assert data["violations"] == []
    with pytest.raises(TruncationError):
        check_freeness_moments(two_semicircles, 9)


def test_equivalence_on_random_spaces(rng):
    for factor_count in (2, 3):
        for _ in range(5):
            space = random_product_space(rng, factor_count, 4)
            assert check_equivalence(space, 4)


# -- variance factorization -------------------------------------------------------


def tensor_word_of_letters(space, pattern):
    components = []
    for index in pattern:
        state = space.factor_state(index)
        la = state.letters()[0]
        components.append((index, state.center(Polynomial.from_letter(la))))
    return TensorWord(tuple(components))


def test_variance_factorization_matches_grouped_route(rng):
    space = random_product_space(rng, 2, 6)
    patterns = [("A1",), ("A2",), ("A1", "A2"), ("A2", "A1"), ("A1", "A2", "A1")]
    for pa in patterns:
        for pb in patterns:
            a = tensor_word_of_letters(space, pa)
            b = tensor_word_of_letters(space, pb)
            direct = variance_factorization(space, a, b)
            general = space.kappa_elements(
                [FreeElement.from_word(a).star(), FreeElement.from_word(b)]
            )
            assert direct == general
            if pa != pb:
                assert direct == ZERO


def test_variance_factorization_mismatched_lengths(two_semicircles):
    a = tensor_word_of_letters(two_semicircles, ("A1",))
    b = tensor_word_of_letters(two_semicircles, ("A1", "A2"))
    assert variance_factorization(two_semicircles, a, b) == ZERO


def test_variance_single_slot_is_phi_of_product(rng):
    # k = l = 1, same factor: kappa_2(a*, b) = phi(a* b) on centered a, b
    space = random_product_space(rng, 2, 4)
    state = space.factor_state("A1")
    la = state.letters()[0]
    a0 = state.center(Polynomial.from_letter(la))
    b0 = state.center(Polynomial.from_letter(la) * Polynomial.from_letter(la))
    value = variance_factorization(
        space, TensorWord((("A1", a0),)), TensorWord((("A1", b0),))
    )
    assert value == state.eval_phi_n([a0.star(), b0])


def test_variance_self_pairing_nonnegative(rng):
    space = ProductSpace(
        [measure_factor_state(rng, "A1", "a", 6), measure_factor_state(rng, "A2", "b", 6)]
    )
    for pattern in [("A1",), ("A1", "A2"), ("A2", "A1")]:
        w = tensor_word_of_letters(space, pattern)
        value = variance_factorization(space, w, w)
        assert value.is_real() and value.re >= 0


def test_kappa2_decomposes_over_patterns(rng):
    # kappa_2(x*, x) = sum over words of kappa_2 restricted to same-pattern
    # pairs: cross-pattern and constant terms vanish exactly
    space = random_product_space(rng, 2, 6)
    words = [
        tensor_word_of_letters(space, ("A1",)),
        tensor_word_of_letters(space, ("A2",)),
        tensor_word_of_letters(space, ("A1", "A2")),
        tensor_word_of_letters(space, ("A2", "A1")),
    ]
    coeffs = [scalar("1/2"), scalar(2), scalar("-1/3"), scalar(1)]
    x = FreeElement(scalar("3/2"), dict(zip(words, coeffs)))
    total = space.kappa_elements([x.star(), x])
    expected = ZERO
    for w, c in zip(words, coeffs):
        expected = expected + c.conjugate() * c * space.kappa_elements(
            [FreeElement.from_word(w).star(), FreeElement.from_word(w)]
        )
    assert total == expected


# -- exact LDL* --------------------------------------------------------------------


def as_matrix(rows):
    return tuple(tuple(scalar(x) for x in row) for row in rows)


def witness_value(matrix, witness):
    n = len(matrix)
    total = ZERO
    for s in range(n):
        for t in range(n):
            total = total + witness[s].conjugate() * matrix[s][t] * witness[t]
    return total


def test_ldlt_on_identity():
    psd, pivots, witness = ldlt_psd(as_matrix([[1, 0], [0, 1]]))
    assert psd and witness is None
    assert list(pivots) == [1, 1]


def test_ldlt_negative_eigenvalue():
    matrix = as_matrix([[1, 2], [2, 1]])
    psd, _, witness = ldlt_psd(matrix)
    assert not psd
    assert witness_value(matrix, witness).re < 0


def test_ldlt_zero_diagonal_indefinite():
    matrix = as_matrix([[0, 1], [1, 0]])
    psd, _, witness = ldlt_psd(matrix)
    assert not psd
    assert witness_value(matrix, witness).re < 0


def test_ldlt_zero_matrix_and_semidefinite():
    psd, pivots, _ = ldlt_psd(as_matrix([[0, 0], [0, 0]]))
    assert psd and list(pivots) == [0, 0]
    # rank-1 PSD with a zero pivot along the way
    matrix = as_matrix([[1, 1], [1, 1]])
    psd, pivots, _ = ldlt_psd(matrix)
    assert psd and list(pivots) == [1, 0]


def test_ldlt_complex_hermitian():
    i = CR.parse("i")
    matrix = (
        (scalar(2), i),
        (-i, scalar(1)),
    )
    psd, pivots, witness = ldlt_psd(matrix)
    assert psd and witness is None
    flipped = (
        (scalar(2), 3 * i),
        (-3 * i, scalar(1)),
    )
    psd, _, witness = ldlt_psd(flipped)
    assert not psd
    assert witness_value(flipped, witness).re < 0


def test_gram_matrix_must_be_hermitian():
    with pytest.raises(RuntimeError):
        GramMatrix(("x", "y"), as_matrix([[1, 2], [3, 1]]))


# -- positivity of states --------------------------------------------------------------


def test_positivity_trivial_basis(two_semicircles):
    result = check_positivity(two_semicircles, 0)
    assert result.psd
    assert result.gram.labels == ("1",)
    assert result.gram.entries[0][0] == ONE


def test_semicircle_factor_positive():
    state = semicircle_factor("A1", "a")
    result = check_positivity(state, 3)
    assert result.psd and result.witness is None
    assert all(p >= 0 for p in result.pivots)


def test_negative_factor_state_witness():
    g = GeneratorSymbol("g", selfadjoint=True)
    lg = Letter(g, False, "F")
    state = {
        Word((lg,)): ZERO,
        Word((lg, lg)): scalar(-1),
    }
    factor = __import__("ncprob").FactorState("F", 2, [g], state)
    result = check_positivity(factor, 1)
    assert not result.psd
    assert result.witness is not None
    assert witness_value(result.gram.entries, result.witness).re < 0


def test_product_positivity_and_schur(two_semicircles):
    result = check_positivity(two_semicircles, 2)
    assert result.psd
    assert result.schur_consistent is True
    assert all(p >= 0 for p in result.pivots)


def test_positive_factors_give_positive_product(rng):
    for factor_count in (2, 3):
        factors = [
            measure_factor_state(rng, f"A{i + 1}", "abc"[i], 4)
            for i in range(factor_count)
        ]
        for state in factors:
            assert check_positivity(state, 2).psd
        space = ProductSpace(factors)
        result = check_positivity(space, 2)
        assert result.psd
        assert result.schur_consistent is True


def test_positivity_degree_guard(two_semicircles):
    with pytest.raises(TruncationError):
        check_positivity(two_semicircles, 4)  # 2 * 4 > 6


def test_positivity_json(two_semicircles):
    data = check_positivity(two_semicircles, 1).to_json()
    assert data["psd"] is True
    assert data["witness"] is None
    assert data["schur_consistent"] is True
    assert data["basis"][0] == "1"


def test_centered_word_basis_degrees(two_semicircles):
    words = centered_word_basis(two_semicircles, 2)
    assert all(w.degree <= 2 for w in words)
    # 2 letters of degree 1, 2 squares, 2 alternating length-2 patterns
    assert len(words) == 6
