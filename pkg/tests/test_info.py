import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from ccqid.channels import ClassicalChannel, CQChannel, channel_state, cq_channel_state, induce_classical
from ccqid.coding import acceptance_matrix
from ccqid.dist import Distribution
from ccqid.info import (
    NumericalIntegrityError,
    _clamp,
    binary_povm,
    classical_mi,
    coarse_grain_distance_check,
    conditional_quantum_mi,
    filter_counting_check,
    holevo,
    holevo_via_state,
    induced_distribution,
    mi_threshold_filter,
    povm_distance,
    quantum_mi,
    shannon_entropy,
    total_variation,
)
from ccqid.linalg import POVM, DimensionError, InvalidStateError, basis_projector, computational_povm
from ccqid.randomness import (
    constant_channel,
    make_rng,
    random_channel,
    random_povm,
    random_pure_state,
    random_state,
    random_weights,
)

seeds = st.integers(0, 2**32 - 1)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def random_cq(rng, n, d):
    return CQChannel.from_outputs(list(range(n)), [random_state(rng, d) for _ in range(n)])


def test_shannon_examples():
    assert shannon_entropy([0.25] * 4) == 2.0
    assert shannon_entropy(Distribution.point("a")) == 0.0
    assert abs(shannon_entropy([0.75, 0.25]) - oracles.H_3_4) < 1e-15


def test_classical_mi_examples(rng):
    assert classical_mi(np.outer([0.3, 0.7], [0.2, 0.5, 0.3])) == 0.0
    assert abs(classical_mi(np.eye(4) / 4) - 2.0) < 1e-12
    j = rng.random((3, 3))
    j /= j.sum()
    ref = oracles.shannon(j.sum(1)) + oracles.shannon(j.sum(0)) - oracles.shannon(j)
    assert abs(classical_mi(j) - ref) < 1e-12
    with pytest.raises(ValueError):
        classical_mi(np.eye(2))


def test_clamp_policy():
    assert _clamp(-1e-10, "x") == 0.0
    assert _clamp(0.5, "x") == 0.5
    with pytest.raises(NumericalIntegrityError):
        _clamp(-1e-3, "x")


def test_induced_distribution_examples(rng):
    rho = random_state(rng, 3)
    trivial = induced_distribution(rho, POVM(np.eye(3)[None].astype(complex)))
    assert np.allclose(trivial.weights, [1.0])
    p = np.array([0.2, 0.3, 0.5])
    assert np.allclose(induced_distribution(np.diag(p), computational_povm(3)).weights, p)
    e = random_povm(rng, 3, 4)
    got = induced_distribution(rho, e).weights
    assert np.allclose(got, [np.real(np.trace(rho @ el)) for el in e.elements], atol=1e-12)
    with pytest.raises(DimensionError):
        induced_distribution(np.eye(2) / 2, e)


def test_total_variation_examples():
    assert total_variation([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert total_variation(Distribution.point("a").dense(["a", "b"]), [0, 1]) == 2.0
    assert abs(total_variation([0.5, 0.5], [0.75, 0.25]) - 0.5) < 1e-15
    with pytest.raises(ValueError):
        total_variation([1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        total_variation(Distribution.point("a"), Distribution.point("b"))


@given(seeds, st.integers(1, 10))
def test_total_variation_is_twice_best_event(seed, n):
    rng = make_rng(seed)
    p, q = random_weights(rng, n, 0.3), random_weights(rng, n, 0.3)
    best = max(sum(p[i] - q[i] for i in s) for r in range(n + 1) for s in itertools.combinations(range(n), r))
    assert abs(total_variation(p, q) - 2 * best) <= 1e-12
    assert abs(total_variation(p, q) - oracles.tv(p, q)) <= 1e-15


def test_povm_distance_examples(rng):
    rho = random_state(rng, 2)
    assert povm_distance(rho, rho, random_povm(rng, 2, 3)) == 0.0
    assert povm_distance(basis_projector(2, 0), basis_projector(2, 1), computational_povm(2)) == 2.0
    sigma, e = random_state(rng, 2), random_povm(rng, 2, 3)
    ref = oracles.tv([np.real(np.trace(rho @ x)) for x in e.elements], [np.real(np.trace(sigma @ x)) for x in e.elements])
    assert abs(povm_distance(rho, sigma, e) - ref) < 1e-12


def test_binary_povm_examples(rng):
    assert np.allclose(binary_povm(np.eye(2)).elements[1], 0)
    assert np.allclose(binary_povm(np.eye(2) / 2).elements, [np.eye(2) / 2] * 2)
    e = binary_povm(random_pure_state(rng, 3))
    assert np.allclose(e.elements.sum(axis=0), np.eye(3))
    with pytest.raises(InvalidStateError):
        binary_povm(np.eye(2) * 1.5)


def test_coarse_grain_examples(rng):
    rho, sigma = random_state(rng, 2), random_state(rng, 2)
    one = POVM(np.eye(2)[None].astype(complex))
    assert coarse_grain_distance_check(rho, sigma, one, [[0], []]) == (0.0, 0.0, True)
    lhs, rhs, ok = coarse_grain_distance_check(rho, sigma, computational_povm(2), [[0, 1], []])
    assert rhs == 0.0 and ok
    with pytest.raises(ValueError):
        coarse_grain_distance_check(rho, sigma, computational_povm(2), [[0], [0, 1]])


@given(seeds, st.integers(2, 4), st.integers(2, 5))
def test_coarse_graining_never_increases_distance(seed, d, n):
    rng = make_rng(seed)
    e = random_povm(rng, d, n)
    mask = rng.random(n) < 0.5
    part = [np.flatnonzero(mask).tolist(), np.flatnonzero(~mask).tolist()]
    lhs, rhs, ok = coarse_grain_distance_check(random_state(rng, d), random_state(rng, d), e, part)
    assert ok and lhs >= rhs - 1e-9


def test_quantum_mi_examples(noiseless):
    assert quantum_mi(channel_state(constant_channel(), [0.5, 0.5], [0.3, 0.7]), "A", "C") == 0.0
    g = channel_state(noiseless, [0.5, 0.5], [0.5, 0.5])
    assert abs(quantum_mi(g, "A", "C") - 1.0) < 1e-12
    assert abs(quantum_mi(g, ["A", "B"], "C") - 2.0) < 1e-12
    with pytest.raises(ValueError):
        quantum_mi(g, ["A", "C"], "C")
    with pytest.raises(ValueError):
        conditional_quantum_mi(g, "A", "C", "A")


@given(seeds)
def test_mutual_informations_match_dense_oracle(seed):
    rng = make_rng(seed)
    w = random_channel(rng, 2, 3, 2)
    p1, p2 = random_weights(rng, 2, 0.2), random_weights(rng, 3, 0.2)
    g = channel_state(w, p1, p2)
    iac, ibc, iac_b, ibc_a, iab_c = oracles.ccq_mis(w.base, p1, p2)
    assert abs(quantum_mi(g, "A", "C") - iac) <= 1e-9
    assert abs(quantum_mi(g, "B", "C") - ibc) <= 1e-9
    assert abs(conditional_quantum_mi(g, "A", "C", "B") - iac_b) <= 1e-9
    assert abs(conditional_quantum_mi(g, "B", "C", "A") - ibc_a) <= 1e-9
    assert abs(quantum_mi(g, ["A", "B"], "C") - iab_c) <= 1e-9
    # chain rule with independent inputs: I(A;C|B) = I(A;BC)
    assert abs(conditional_quantum_mi(g, "A", "C", "B") - quantum_mi(g, "A", ["B", "C"])) <= 1e-9


@given(seeds)
def test_conditioning_on_a_point_mass_changes_nothing(seed):
    rng = make_rng(seed)
    w = random_channel(rng, 3, 2, 2)
    g = channel_state(w, random_weights(rng, 3), Distribution.point((1,)))
    assert abs(conditional_quantum_mi(g, "A", "C", "B") - quantum_mi(g, "A", "C")) <= 1e-9


def test_holevo_examples(rng):
    assert holevo([0.4, 0.6], CQChannel.from_outputs([0, 1], [np.eye(2) / 2] * 2)) == 0.0
    ortho = CQChannel.from_outputs([0, 1, 2], [basis_projector(3, i) for i in range(3)])
    assert abs(holevo([1 / 3] * 3, ortho) - np.log2(3)) < 1e-12
    zp = CQChannel.from_outputs([0, 1], [basis_projector(2, 0), PLUS])
    assert abs(holevo([0.5, 0.5], zp) - oracles.HOLEVO_ZERO_PLUS) < 1e-12
    joint = induce_classical(zp, computational_povm(2)).joint(Distribution((0, 1), [0.5, 0.5]))
    assert abs(classical_mi(joint) - oracles.ACC_ZERO_PLUS_Z) < 1e-12


@given(seeds, st.integers(2, 4), st.integers(2, 3), st.integers(1, 5))
def test_holevo_bounds_measured_information(seed, n, d, outcomes):
    rng = make_rng(seed)
    w = random_cq(rng, n, d)
    p = Distribution.from_dense(random_weights(rng, n, 0.2), list(range(n)))
    chi = holevo(p, w)
    assert abs(chi - holevo_via_state(p, w)) <= 1e-8
    joint = induce_classical(w, random_povm(rng, d, outcomes)).joint(p)
    assert classical_mi(joint) <= chi + 1e-8


@given(seeds)
def test_region_trio_on_independent_inputs(seed):
    rng = make_rng(seed)
    w = random_channel(rng, 2, 2, 3)
    g = channel_state(w, random_weights(rng, 2), random_weights(rng, 2))
    iac, ibc = quantum_mi(g, "A", "C"), quantum_mi(g, "B", "C")
    assert iac <= conditional_quantum_mi(g, "A", "C", "B") + 1e-8
    assert ibc <= conditional_quantum_mi(g, "B", "C", "A") + 1e-8
    assert iac + ibc <= quantum_mi(g, ["A", "B"], "C") + 1e-8


def test_cq_state_roles(rng):
    w = random_cq(rng, 3, 2)
    g = cq_channel_state(w, [0.2, 0.3, 0.5])
    assert abs(quantum_mi(g, 0, 1) - quantum_mi(g, "A", "C")) < 1e-15


def test_threshold_filter_examples():
    ident = ClassicalChannel((0, 1), (0, 1), np.eye(2))
    family = [Distribution((0, 1), [0.5, 0.5]), Distribution.point(0)]
    assert mi_threshold_filter(family, ident, 0.0) == [0, 1]
    assert mi_threshold_filter(family, ident, 1.5) == []
    assert mi_threshold_filter(family, ident, 0.5) == [0]


def test_filter_counting():
    assert filter_counting_check(5, [{0}, {1, 2}]) == (2, 2, True)
    assert filter_counting_check(5, [{0, 1}, {0, 1}]) == (3, 1, True)
    assert filter_counting_check(3, []) == (3, 3, True)


@given(seeds, st.integers(1, 12), st.integers(0, 4))
def test_filter_counting_always_holds(seed, M, J):
    rng = make_rng(seed)
    removed = [set(np.flatnonzero(rng.random(M) < 0.3).tolist()) for _ in range(J)]
    survivors, bound, ok = filter_counting_check(M, removed)
    assert ok and survivors >= bound


def test_distance_chain_on_perfect_code(noiseless, perfect_code):
    # converse chain: d1 between inputs seen through the refinement exceeds 2(1 - e1 - e2)
    from ccqid.coding import transmission_as_id_code

    idc = transmission_as_id_code(perfect_code)
    T = acceptance_matrix(idc, noiseless)
    assert T[0, 0, 0, 0] == 1.0
    e = idc.structure.refinement
    d = povm_distance(noiseless.output(0, 0), noiseless.output(1, 0), e)
    assert d > 2 * (1 - 0 - 0) - 1e-8
