import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from ccqid.channels import FIX_AVERAGE_X, FIX_AVERAGE_Y, CCQChannel, extend_memoryless
from ccqid.coding import (
    TransmissionCode,
    avg_error,
    check_simultaneous,
    cq_avg_error,
    cq_max_error,
    max_error,
    success_matrix,
)
from ccqid.linalg import basis_projector, effect_violations
from ccqid.randomness import make_rng, random_channel, random_code
from ccqid.transforms import (
    MapFamily,
    SamplingExhaustedError,
    _assemble,
    binary_kl,
    chernoff_tail_bound,
    concatenate,
    extract_max_error,
    reduce_single_sender,
    TransformatorResult,
    transformator_bounds,
    transformator_build,
    transformator_verify,
)

seeds = st.integers(0, 2**32 - 1)


def graded_code():
    """Four messages on a one-input-y channel with per-message errors (0, 0, 0.4, 0.4)."""
    outs = np.array([[basis_projector(4, x)] for x in range(4)])
    w = CCQChannel([str(i) for i in range(4)], ["0"], outs)
    dec = np.zeros((4, 1, 4, 4), dtype=complex)
    dec[0, 0] = basis_projector(4, 0)
    dec[1, 0] = basis_projector(4, 1)
    dec[2, 0] = 0.6 * basis_projector(4, 2) + 0.4 * basis_projector(4, 3)
    dec[3, 0] = 0.4 * basis_projector(4, 2) + 0.6 * basis_projector(4, 3)
    return w, TransmissionCode(1, [3, 2, 1, 0], [0], dec[::-1].copy())


# -- reduction and extraction ------------------------------------------------


def test_reduce_perfect_code(noiseless, perfect_code):
    for side in (FIX_AVERAGE_Y, FIX_AVERAGE_X):
        w1, c1 = reduce_single_sender(perfect_code, noiseless, side)
        assert cq_max_error(c1, w1) == 0.0
    with pytest.raises(ValueError):
        reduce_single_sender(perfect_code, noiseless, "z")


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_reduction_error_matches_enumeration(seed, M, N):
    rng = make_rng(seed)
    w = random_channel(rng, 3, 3, 2)
    code = random_code(rng, w, M, N, failure=bool(seed % 2))
    w1, c1 = reduce_single_sender(code, w, FIX_AVERAGE_Y)
    # brute force: mean over m of 1 - (1/N) Σ_n Σ_n' tr(D_mn' W(x_m, y_n))
    ref = np.mean([1 - np.mean([sum(np.real(np.trace(code.decoders[m, n2] @ w.output(code.codewords_x[m], y)))
                                    for n2 in range(N)) for y in code.codewords_y]) for m in range(M)])
    assert abs(cq_avg_error(c1, w1) - ref) <= 1e-12
    assert cq_avg_error(c1, w1) <= avg_error(code, w) + 1e-9


def test_extraction_examples(noiseless, perfect_code):
    ex = extract_max_error(perfect_code, noiseless, keep=2)
    assert ex.lam == 0.0 and ex.n0 == 0
    w, code = graded_code()
    assert np.allclose(1 - success_matrix(code, w)[:, 0], [0.4, 0.4, 0, 0])
    ex = extract_max_error(code, w, keep=2)
    assert abs(ex.avg_error - 0.2) < 1e-12
    assert ex.order == [2, 3, 0, 1]
    assert ex.lam == 0.0 and ex.code.codewords == [(1,), (0,)]
    assert abs(extract_max_error(code, w, keep=3).lam - 0.4) < 1e-12
    with pytest.raises(ValueError):
        extract_max_error(code, w, keep=5)


@given(seeds, st.integers(1, 4), st.integers(1, 4), st.sampled_from(["x", "y"]))
def test_extraction_half_bound_and_sort(seed, M, N, side):
    rng = make_rng(seed)
    w = random_channel(rng, 3, 3, 2)
    code = random_code(rng, w, M, N)
    S = success_matrix(code, w)
    S = S if side == "x" else S.T
    keep = math.ceil(S.shape[0] / 2)
    ex = extract_max_error(code, w, keep, side=side)
    # brute force: best column, then sort-and-take
    col = int(np.argmin([1 - S[:, j].mean() for j in range(S.shape[1])]))
    errs = [1 - S[m, col] for m in range(S.shape[0])]
    order = sorted(range(len(errs)), key=lambda m: (errs[m], m))
    assert ex.n0 == col and ex.order == order
    assert abs(ex.lam - errs[order[keep - 1]]) <= 1e-12
    assert ex.row_error <= avg_error(code, w) + 1e-12
    assert ex.lam <= 2 * avg_error(code, w) + 1e-12
    # the extracted code realises the stated max error on the fixed-sender channel
    assert abs(cq_max_error(ex.code, ex.channel) - ex.lam) <= 1e-9


# -- concatenation -------------------------------------------------------------


def test_concatenate_trivial_and_perfect(noiseless, perfect_code):
    one = TransmissionCode(1, [0], [0], np.eye(4)[None, None])
    joined = concatenate(perfect_code, one, noiseless)
    assert (joined.M, joined.N, joined.k) == (2, 2, 2)
    assert max_error(joined, extend_memoryless(noiseless, 2)) == 0.0
    pp = concatenate(perfect_code, perfect_code, noiseless)
    assert (pp.M, pp.N) == (4, 4)
    assert max_error(pp, extend_memoryless(noiseless, 2)) == 0.0
    assert pp.rates().r1_transmission == 1.0
    assert pp.codewords_x[1 * 2 + 1] == (1, 1)


@given(seeds)
def test_concatenate_success_factorises(seed):
    rng = make_rng(seed)
    w = random_channel(rng, 2, 2, 2)
    ca, cb = random_code(rng, w, 2, 1), random_code(rng, w, 1, 2, failure=True)
    joined = concatenate(ca, cb, w)
    S = success_matrix(joined, extend_memoryless(w, 2))
    Sa, Sb = success_matrix(ca, w), success_matrix(cb, w)
    for m in range(2):
        for n in range(2):
            assert abs(S[m, n] - Sa[m, 0] * Sb[0, n]) <= 1e-12
    bound = 1 - (1 - max_error(ca, w)) * (1 - max_error(cb, w))
    assert max_error(joined, extend_memoryless(w, 2)) <= bound + 1e-9
    assert not joined.povm().violations()


def test_concatenate_rejects_foreign_alphabet(noiseless):
    outs = np.array([[np.eye(4) / 4] * 3] * 2)
    w3 = CCQChannel(["0", "1"], ["0", "1", "2"], outs)
    c = TransmissionCode(1, [0], [2], np.eye(4)[None, None])
    with pytest.raises(ValueError):
        concatenate(c, c, noiseless)
    assert concatenate(c, c, w3).N == 1


# -- Chernoff ------------------------------------------------------------------------


def test_binary_kl_values():
    assert binary_kl(0.3, 0.3) == 0.0
    assert abs(binary_kl(0.5, 0.25) - oracles.KL_HALF_QUARTER) < 1e-15
    assert abs(chernoff_tail_bound(0.5, 0.25, 20) - oracles.TAIL_BOUND_20) < 1e-15
    assert chernoff_tail_bound(0.26, 0.25, 1) > 0.99
    for bad in ((0.0, 0.5), (0.5, 1.0)):
        with pytest.raises(ValueError):
            binary_kl(*bad)
    with pytest.raises(ValueError):
        chernoff_tail_bound(0.25, 0.25, 5)


def test_exact_binomial_tail_below_bound():
    tail = sum(math.comb(20, j) * 0.25**j * 0.75**(20 - j) for j in range(11, 21))
    assert abs(tail - oracles.BINOM_TAIL_20) < 1e-15
    assert tail <= chernoff_tail_bound(0.5, 0.25, 20)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_binary_kl_matches_formula_and_is_nonnegative(lam, mu):
    v = binary_kl(lam, mu)
    assert v >= 0
    assert abs(v - oracles.binary_kl(lam, mu)) <= 1e-12


@given(st.floats(0.05, 0.95), st.integers(2, 64))
def test_binary_kl_lower_bound_in_inner_size(lam, m2):
    assert binary_kl(lam, 1 / m2) >= lam * math.log2(m2) - 1 - 1e-12


@given(st.floats(0.3, 0.9), st.floats(0.01, 0.29), st.integers(1, 200))
def test_tail_bound_decreases_in_m_and_in_divergence(lam, mu, m):
    b = chernoff_tail_bound(lam, mu, m)
    assert 0 < b <= 1
    assert chernoff_tail_bound(lam, mu, m + 1) <= b
    assert chernoff_tail_bound(lam, mu / 2, m) <= b


# -- transformator -------------------------------------------------------------------


def outer_inner(noiseless, perfect_code):
    return concatenate(perfect_code, perfect_code, noiseless), perfect_code


def test_map_family_validation_and_overlaps():
    maps = MapFamily([[0, 1, 1], [0, 0, 1]], [[1, 1, 1]], 2, 2)
    oa, ob = maps.overlaps()
    assert oa.tolist() == [[3, 2], [2, 3]] and ob.tolist() == [[3]]
    with pytest.raises(ValueError):
        MapFamily([[0, 2]], [[0, 0]], 2, 2)


def test_verify_examples(noiseless, perfect_code):
    res = transformator_build(perfect_code, perfect_code, 2, 1, rng_seed=0)
    res.maps.maps_a[1] = res.maps.maps_a[0]
    res.overlap_a, res.overlap_b = res.maps.overlaps()
    rep = transformator_verify(res, 0.5)
    assert not rep.ok and rep.max_overlap_a == 2
    single = transformator_build(perfect_code, perfect_code, 1, 1, rng_seed=0)
    rep = transformator_verify(single, 0.5)
    assert rep.ok and rep.union_bound == 0.0
    with pytest.raises(ValueError):
        transformator_verify(single, 1.0)


def test_verify_pass_rate_matches_chernoff_prediction(noiseless, perfect_code):
    # two identities, M' = 16 positions, inner size 2: collision counts are Bin(16, 1/2)
    outer = concatenate(concatenate(perfect_code, perfect_code), concatenate(perfect_code, perfect_code))
    inner = perfect_code
    lam = 0.75
    fails = 0
    trials = 200
    for seed in range(trials):
        maps = MapFamily(make_rng(seed).integers(0, 2, size=(2, 16)), np.zeros((1, 16), dtype=int), 2, 2)
        oa, _ = maps.overlaps()
        fails += oa[0, 1] > lam * 16
    bound = chernoff_tail_bound(lam, 0.5, 16)
    exact = sum(math.comb(16, j) for j in range(13, 17)) / 2**16
    assert exact <= bound
    assert fails / trials <= bound + 3 * math.sqrt(bound / trials)
    assert outer.M == 16 and inner.M == 2


def test_perfect_constituents_zero_collision_gives_zero_errors(noiseless, perfect_code):
    outer, inner = outer_inner(noiseless, perfect_code)
    res = transformator_build(outer, inner, 2, 2, rng_seed=1)
    # force maps that disagree everywhere
    res.maps.maps_a[:] = [[0, 0, 0, 0], [1, 1, 1, 1]]
    res.maps.maps_b[:] = [[0, 1, 0, 1], [1, 0, 1, 0]]
    res.id_code, res.structure = _assemble(outer, inner, res.maps)
    res.overlap_a, res.overlap_b = res.maps.overlaps()
    b = transformator_bounds(res, noiseless, lam=0.5)
    assert b.e1 == 0.0 and b.e2 == 0.0 and b.e2_cross == 0.0


def test_single_identity_pair(noiseless, perfect_code):
    res = transformator_build(perfect_code, perfect_code, 1, 1, rng_seed=3)
    b = transformator_bounds(res, noiseless)
    assert b.e2 is None and b.e2_cross is None
    assert b.e1 <= b.e1_bound + 1e-8


def test_build_rejects_small_inner(perfect_code):
    one = TransmissionCode(1, [0], [0], np.eye(4)[None, None])
    with pytest.raises(ValueError):
        transformator_build(perfect_code, one, 2, 2, rng_seed=0)
    with pytest.raises(ValueError):
        transformator_build(perfect_code, perfect_code, 0, 2, rng_seed=0)


def test_exhaustion_reports_best_candidate(perfect_code):
    # three distinct maps [2] -> [2] with at most 0 collisions cannot exist
    with pytest.raises(SamplingExhaustedError) as info:
        transformator_build(perfect_code, perfect_code, 3, 3, rng_seed=0, lam=0.1, max_attempts=5)
    assert info.value.best is not None and not info.value.report.ok


def test_build_is_deterministic(noiseless, perfect_code):
    outer, inner = outer_inner(noiseless, perfect_code)
    a = transformator_build(outer, inner, 3, 3, rng_seed=11, lam=0.6)
    b = transformator_build(outer, inner, 3, 3, rng_seed=11, lam=0.6)
    assert np.array_equal(a.maps.maps_a, b.maps.maps_a) and a.attempts == b.attempts
    assert np.array_equal(a.id_code.identifiers, b.id_code.identifiers)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_transformator_structure_and_first_kind_bound(seed, M, N):
    rng = make_rng(seed)
    w = random_channel(rng, 2, 2, 2)
    outer = random_code(rng, w, 2, 2, failure=True)
    inner = random_code(rng, w, 2, 2)
    res = transformator_build(outer, inner, M, N, rng_seed=seed)
    code = res.id_code
    for m in range(M):
        for n in range(N):
            assert not effect_violations(code.identifiers[m, n])
    ok, residual = check_simultaneous(code, res.structure)
    assert ok and residual <= 1e-8
    assert all(len(d) <= outer.M for d in code.dists_x)
    assert np.array_equal(res.overlap_a, res.maps.overlaps()[0])
    b = transformator_bounds(res, w)
    assert b.e1 <= b.e1_bound + 1e-8
    if b.e2_cross is not None:
        assert b.e2_cross <= b.e2_collision_bound + 1e-8


@given(seeds)
def test_second_kind_bound_on_cross_pairs_with_perfect_constituents(seed):
    from ccqid.randomness import noiseless_binary_channel, perfect_binary_code

    w, pc = noiseless_binary_channel(), perfect_binary_code()
    outer = concatenate(pc, pc, w)
    lam = 0.75
    try:
        res = transformator_build(outer, pc, 3, 3, rng_seed=seed, lam=lam)
    except SamplingExhaustedError:
        return
    b = transformator_bounds(res, w)
    assert b.lam_k == 0.0
    assert b.e2_cross <= lam**2 + 3 * b.lam_k + 1e-8
    # literal e2 also ranges over pairs sharing one identity, where the overlap is single-sided
    fa = res.overlap_a[~np.eye(3, dtype=bool)].max() / outer.M
    fb = res.overlap_b[~np.eye(3, dtype=bool)].max() / outer.N
    assert abs(b.e2 - max(fa, fb)) <= 1e-12


def test_noisy_outer_code_breaks_the_lambda_k_bound_but_not_the_collision_bound(noiseless, perfect_code):
    # with a perfect inner code lam_k = 0 whatever the outer error, yet outer
    # misdecoding still lets the wrong identity collide with the sent one
    eps = 0.3
    dec = np.zeros((2, 2, 4, 4), dtype=complex)
    swap = [0, 2, 1, 3]
    for a in range(2):
        for b in range(2):
            i = 2 * a + b
            dec[a, b] = (1 - eps) * basis_projector(4, i) + eps * basis_projector(4, swap[i])
    outer = TransmissionCode(1, [0, 1], [0, 1], dec)
    maps = MapFamily([[0, 0], [0, 1]], [[0, 0], [0, 1]], 2, 2)
    code, structure = _assemble(outer, perfect_code, maps)
    oa, ob = maps.overlaps()
    res = TransformatorResult(code, structure, maps, oa, ob, 1, outer, perfect_code, 0, 0.5)
    assert transformator_verify(res, 0.5).ok
    b = transformator_bounds(res, noiseless)
    assert b.lam_k == 0.0 and abs(b.lam_outer - eps) < 1e-12
    assert abs(b.e2_cross - 0.325) < 1e-12
    assert b.e2_cross > 0.5**2 + 3 * b.lam_k
    assert b.e2_cross <= b.e2_collision_bound + 1e-12
