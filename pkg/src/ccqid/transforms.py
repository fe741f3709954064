"""Code constructions: single-sender reduction, max-error extraction,
time-sharing concatenation, the Chernoff-Hoeffding tail bound and the
random "transformator" construction of simultaneous ID codes from two
transmission codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    FIX_AVERAGE_X,
    FIX_AVERAGE_Y,
    CCQChannel,
    CQChannel,
    extend_memoryless,
    fix_sender,
    marginal_cq,
)
from .coding import (
    CQCode,
    IDCode,
    SimultaneousStructure,
    TransmissionCode,
    acceptance_matrix,
    cq_avg_error,
    id_error_1,
    id_error_2,
    id_error_2_cross,
    max_error,
    success_matrix,
)
from .config import get_tolerances
from .dist import Distribution
from .linalg import POVM, DimensionError, check_dim_cap


class SamplingExhaustedError(RuntimeError):
    """No sampled map family met the overlap requirement within the attempt budget."""

    def __init__(self, message: str, best: "TransformatorResult | None", report: "VerifyReport | None"):
        super().__init__(message)
        self.best = best
        self.report = report


# -- single-sender reduction ---------------------------------------------------


def reduce_single_sender(c: TransmissionCode, wk: CCQChannel, side: str = FIX_AVERAGE_Y):
    """Use a two-sender code as a one-sender code over the averaged channel.

    With ``fix_average_y`` the y-codewords are averaged uniformly and the
    decoders become ``s_m = Σ_n D_mn``; ``fix_average_x`` is the mirror.
    Returns ``(channel, code)``.
    """
    if side == FIX_AVERAGE_Y:
        channel = marginal_cq(wk, c.codewords_y, FIX_AVERAGE_Y)
        code = CQCode(c.k, c.codewords_x, c.decoders.sum(axis=1), c.failure, validate=False)
    elif side == FIX_AVERAGE_X:
        channel = marginal_cq(wk, c.codewords_x, FIX_AVERAGE_X)
        code = CQCode(c.k, c.codewords_y, c.decoders.sum(axis=0), c.failure, validate=False)
    else:
        raise ValueError(f"unknown side {side!r}")
    return channel, code


# -- max-error extraction ------------------------------------------------------


@dataclass
class Extraction:
    code: CQCode
    channel: CQChannel
    lam: float
    n0: int
    row_error: float
    avg_error: float
    order: list
    message_errors: np.ndarray


def extract_max_error(c: TransmissionCode, wk: CCQChannel, keep: int, side: str = "x") -> Extraction:
    """Fix the best other-sender codeword, then keep the ``keep`` most reliable messages.

    The fixed codeword ``n0`` minimises the row-average error (lowest index
    on ties), so its row error is at most the code's average error.
    Messages are stably sorted by error; ``lam`` is the largest error among
    the kept ones.  For ``keep <= ceil(M / 2)``, ``lam <= 2 * avg_error``.
    """
    S = success_matrix(c, wk)
    avg = float(1.0 - S.mean())
    if side == "y":
        S = S.T
    M = S.shape[0]
    if not 1 <= keep <= M:
        raise ValueError(f"keep must lie in [1, {M}]")
    row_err = 1.0 - S.mean(axis=0)
    n0 = int(np.argmin(row_err))
    errs = 1.0 - S[:, n0]
    order = sorted(range(M), key=lambda m: (errs[m], m))
    kept = order[:keep]
    lam = float(errs[kept[-1]])
    if side == "x":
        words = [c.codewords_x[m] for m in kept]
        decs = np.array([c.decoders[m, n0] for m in kept])
        channel = fix_sender(wk, Distribution.point(c.codewords_y[n0]), side="y")
    else:
        words = [c.codewords_y[m] for m in kept]
        decs = np.array([c.decoders[n0, m] for m in kept])
        channel = fix_sender(wk, Distribution.point(c.codewords_x[n0]), side="x")
    # completing with a failure effect keeps the decoders a POVM
    code = CQCode(c.k, words, decs, np.eye(c.dim) - decs.sum(axis=0), validate=False)
    return Extraction(code, channel, lam, n0, float(row_err[n0]), avg, order, errs)


# -- time sharing --------------------------------------------------------------


def concatenate(cA: TransmissionCode, cB: TransmissionCode, channel: CCQChannel | None = None) -> TransmissionCode:
    """Send a message of ``cA`` followed by one of ``cB``; decoders ``D ⊗ D'``.

    Message ``(m, m')`` gets index ``m * M_B + m'`` (likewise for the second
    sender).  When ``channel`` is given, both codes are checked against its
    alphabets and output dimension.
    """
    if channel is not None:
        d = channel.base_dim
        nx, ny = len(channel.x_alphabet), len(channel.y_alphabet)
        for code in (cA, cB):
            if code.dim != d**code.k:
                raise ValueError("code dimension does not match the channel family")
            if any(s >= nx for w in code.codewords_x for s in w) or any(s >= ny for w in code.codewords_y for s in w):
                raise ValueError("codeword symbols outside the channel alphabets")
    check_dim_cap(cA.dim * cB.dim)
    xs = [a + b for a in cA.codewords_x for b in cB.codewords_x]
    ys = [a + b for a in cA.codewords_y for b in cB.codewords_y]
    MA, NA, MB, NB = cA.M, cA.N, cB.M, cB.N
    D = cA.dim * cB.dim
    dec = np.empty((MA * MB, NA * NB, D, D), dtype=complex)
    for m in range(MA):
        for n in range(NA):
            for m2 in range(MB):
                for n2 in range(NB):
                    dec[m * MB + m2, n * NB + n2] = np.kron(cA.decoders[m, n], cB.decoders[m2, n2])
    failure = np.eye(D) - dec.reshape(-1, D, D).sum(axis=0)
    return TransmissionCode(cA.k + cB.k, xs, ys, dec, failure, validate=False)


# -- Chernoff-Hoeffding --------------------------------------------------------


def binary_kl(lam: float, mu: float) -> float:
    """Relative entropy ``D((lam, 1-lam) || (mu, 1-mu))`` in bits."""
    if not (0.0 < lam < 1.0 and 0.0 < mu < 1.0):
        raise ValueError("binary_kl needs both arguments strictly inside (0, 1)")
    return lam * math.log2(lam / mu) + (1.0 - lam) * math.log2((1.0 - lam) / (1.0 - mu))


def chernoff_tail_bound(lam: float, mu: float, m: int) -> float:
    """Upper bound ``2^(-m D(lam || mu))`` on ``Pr(Σ ψ_j > lam m)`` for Bernoulli(<= mu) terms."""
    if not mu < lam:
        raise ValueError("the tail bound needs mu < lam")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return 2.0 ** (-m * binary_kl(lam, mu))


# -- transformator ---------------------------------------------------------------


@dataclass
class MapFamily:
    """``maps_a[i, a] = A_i(a)`` in ``range(M2)``; ``maps_b[j, b] = B_j(b)`` in ``range(N2)``."""

    maps_a: np.ndarray
    maps_b: np.ndarray
    M2: int
    N2: int

    def __post_init__(self):
        self.maps_a = np.asarray(self.maps_a, dtype=np.int64)
        self.maps_b = np.asarray(self.maps_b, dtype=np.int64)
        for arr, top in ((self.maps_a, self.M2), (self.maps_b, self.N2)):
            if arr.ndim != 2 or arr.size == 0:
                raise ValueError("maps must be stored as 2-d index arrays")
            if arr.min() < 0 or arr.max() >= top:
                raise ValueError("map image index out of range")

    def overlaps(self) -> tuple[np.ndarray, np.ndarray]:
        """Collision counts ``Σ_a [A_i(a) = A_i'(a)]`` (and likewise for B)."""
        A, B = self.maps_a, self.maps_b
        oa = (A[:, None, :] == A[None, :, :]).sum(axis=2)
        ob = (B[:, None, :] == B[None, :, :]).sum(axis=2)
        return oa, ob


@dataclass
class VerifyReport:
    ok: bool
    lam: float
    max_overlap_a: int
    max_overlap_b: int
    limit_a: float
    limit_b: float
    pair_bound_a: float
    pair_bound_b: float
    union_bound: float
    violations: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TransformatorResult:
    id_code: IDCode
    structure: SimultaneousStructure
    maps: MapFamily
    overlap_a: np.ndarray
    overlap_b: np.ndarray
    attempts: int
    outer: TransmissionCode
    inner: TransmissionCode
    seed: int | None = None
    lam: float | None = None

    @property
    def M1(self) -> int:
        return self.outer.M

    @property
    def N1(self) -> int:
        return self.outer.N


def transformator_verify(res: TransformatorResult, lam: float) -> VerifyReport:
    """Check pairwise collision counts against ``lam * M'`` and ``lam * N'``.

    The report carries the per-pair Chernoff prediction
    ``Pr(Σ ψ > lam M') <= 2^(-M' D(lam || 1/M''))`` and the union bound
    ``(M-1) Pr_a + (N-1) Pr_b`` (1.0 is reported where the bound does not
    apply because ``1/M'' >= lam``).
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    M1, N1 = res.maps.maps_a.shape[1], res.maps.maps_b.shape[1]
    M, N = res.maps.maps_a.shape[0], res.maps.maps_b.shape[0]
    oa, ob = res.overlap_a, res.overlap_b
    off_a = oa[~np.eye(M, dtype=bool)] if M > 1 else np.zeros(0, dtype=int)
    off_b = ob[~np.eye(N, dtype=bool)] if N > 1 else np.zeros(0, dtype=int)
    violations = []
    for i in range(M):
        for i2 in range(i + 1, M):
            if oa[i, i2] > lam * M1:
                violations.append(("a", i, i2, int(oa[i, i2])))
    for j in range(N):
        for j2 in range(j + 1, N):
            if ob[j, j2] > lam * N1:
                violations.append(("b", j, j2, int(ob[j, j2])))
    pa = chernoff_tail_bound(lam, 1.0 / res.maps.M2, M1) if 1.0 / res.maps.M2 < lam else 1.0
    pb = chernoff_tail_bound(lam, 1.0 / res.maps.N2, N1) if 1.0 / res.maps.N2 < lam else 1.0
    return VerifyReport(
        ok=not violations, lam=lam,
        max_overlap_a=int(off_a.max()) if off_a.size else 0,
        max_overlap_b=int(off_b.max()) if off_b.size else 0,
        limit_a=lam * M1, limit_b=lam * N1,
        pair_bound_a=pa, pair_bound_b=pb,
        union_bound=(M - 1) * pa + (N - 1) * pb,
        violations=violations,
    )


def _assemble(outer: TransmissionCode, inner: TransmissionCode, maps: MapFamily) -> tuple[IDCode, SimultaneousStructure]:
    M1, N1, M2, N2 = outer.M, outer.N, inner.M, inner.N
    D1, D2 = outer.dim, inner.dim
    D = D1 * D2
    # refinement E[(a, c), (b, d)] = D'_ab ⊗ D''_cd with r = a*M2 + c, s = b*N2 + d
    els, labels = [], []
    for a in range(M1):
        for c in range(M2):
            for b in range(N1):
                for d in range(N2):
                    els.append(np.kron(outer.decoders[a, b], inner.decoders[c, d]))
                    labels.append((a * M2 + c, b * N2 + d))
    els = np.array(els)
    fail = np.eye(D) - els.sum(axis=0)
    if np.max(np.abs(fail)) > get_tolerances().povm_sum:
        els = np.concatenate([els, fail[None]])
        labels.append((M1 * M2, N1 * N2))
    refinement = POVM(els, tuple(labels))
    A, B = maps.maps_a, maps.maps_b
    subsets_a = [{a * M2 + int(A[i, a]) for a in range(M1)} for i in range(A.shape[0])]
    subsets_b = [{b * N2 + int(B[j, b]) for b in range(N1)} for j in range(B.shape[0])]
    structure = SimultaneousStructure(refinement, subsets_a, subsets_b)

    ids = np.zeros((A.shape[0], B.shape[0], D, D), dtype=complex)
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            for a in range(M1):
                for b in range(N1):
                    ids[i, j] += np.kron(outer.decoders[a, b], inner.decoders[A[i, a], B[j, b]])
    dists_x = [Distribution.uniform([outer.codewords_x[a] + inner.codewords_x[A[i, a]] for a in range(M1)])
               for i in range(A.shape[0])]
    dists_y = [Distribution.uniform([outer.codewords_y[b] + inner.codewords_y[B[j, b]] for b in range(N1)])
               for j in range(B.shape[0])]
    code = IDCode(outer.k + inner.k, dists_x, dists_y, ids, structure, validate=False)
    return code, structure


def transformator_build(outer: TransmissionCode, inner: TransmissionCode, m_target: int, n_target: int,
                        rng_seed: int, lam: float | None = None, max_attempts: int | None = None) -> TransformatorResult:
    """Random simultaneous ID code from an outer ``(k, M', N')`` and inner ``(r, M'', N'')`` code.

    Each identity ``i`` draws a map ``A_i: [M'] -> [M'']`` with iid uniform
    coordinates (likewise ``B_j``); ``P_i`` is uniform on the concatenated
    words ``u'_a u''_{A_i(a)}`` and ``I_ij = Σ_ab D'_ab ⊗ D''_{A_i(a) B_j(b)}``.
    When ``lam`` is given, map families are resampled until every pair of
    identities collides in at most ``lam`` of the positions, for at most
    ``max_attempts`` draws.  Sampling uses ``numpy``'s PCG64 seeded with
    ``rng_seed``.
    """
    if m_target < 1 or n_target < 1:
        raise ValueError("need at least one identity per sender")
    if inner.M < 2 or inner.N < 2:
        raise ValueError("the inner code needs at least two messages per sender")
    check_dim_cap(outer.dim * inner.dim)
    attempts_cap = get_tolerances().max_attempts if max_attempts is None else int(max_attempts)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    best = None
    best_key = None
    for attempt in range(1, attempts_cap + 1):
        maps = MapFamily(rng.integers(0, inner.M, size=(m_target, outer.M)),
                         rng.integers(0, inner.N, size=(n_target, outer.N)), inner.M, inner.N)
        oa, ob = maps.overlaps()
        if lam is None:
            best = (maps, oa, ob, attempt)
            break
        probe = TransformatorResult(None, None, maps, oa, ob, attempt, outer, inner, rng_seed, lam)
        report = transformator_verify(probe, lam)
        key = (len(report.violations), report.max_overlap_a / outer.M + report.max_overlap_b / outer.N)
        if best_key is None or key < best_key:
            best, best_key = (maps, oa, ob, attempt), key
        if report.ok:
            best = (maps, oa, ob, attempt)
            break
    else:
        maps, oa, ob, attempt = best
        code, structure = _assemble(outer, inner, maps)
        res = TransformatorResult(code, structure, maps, oa, ob, attempts_cap, outer, inner, rng_seed, lam)
        report = transformator_verify(res, lam)
        raise SamplingExhaustedError(
            f"no map family met lam={lam} within {attempts_cap} attempts "
            f"(union bound {report.union_bound:.3g})", res, report)
    maps, oa, ob, attempt = best
    code, structure = _assemble(outer, inner, maps)
    return TransformatorResult(code, structure, maps, oa, ob, attempt, outer, inner, rng_seed, lam)


@dataclass
class TransformatorBounds:
    lam_outer: float
    lam_inner: float
    lam_k: float
    e1_bound: float
    e2_bound: float | None
    e2_collision_bound: float | None
    e1: float
    e2: float | None
    e2_cross: float | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def transformator_bounds(res: TransformatorResult, w: CCQChannel, lam: float | None = None) -> TransformatorBounds:
    """Measured constituent errors, the resulting e1/e2 bounds and brute-force e1/e2.

    ``lam_outer``/``lam_inner`` are max errors of the outer and inner codes;
    ``lam_k = lam_inner + lam_outer * lam_inner``; ``e2_bound = lam^2 + 3 lam_k``.
    ``e2_collision_bound`` is ``max ψφ/(M'N') + lam_outer + lam_inner`` over
    pairs differing in both identities, which bounds ``e2_cross`` for any
    constituent codes.
    """
    lam = res.lam if lam is None else lam
    lo = max_error(res.outer, extend_memoryless(w, res.outer.k))
    li = max_error(res.inner, extend_memoryless(w, res.inner.k))
    lam_k = li + lo * li
    wm = extend_memoryless(w, res.outer.k + res.inner.k)
    T = acceptance_matrix(res.id_code, wm)
    code = res.id_code
    e1 = id_error_1(code, wm, T)
    e2 = id_error_2(code, wm, T) if code.M * code.N >= 2 else None
    e2c = id_error_2_cross(code, wm, T) if code.M >= 2 and code.N >= 2 else None
    coll = None
    if code.M >= 2 and code.N >= 2:
        fa = res.overlap_a / res.outer.M
        fb = res.overlap_b / res.outer.N
        off_a = fa[~np.eye(code.M, dtype=bool)].max()
        off_b = fb[~np.eye(code.N, dtype=bool)].max()
        coll = float(off_a * off_b + lo + li)
    return TransformatorBounds(
        lam_outer=lo, lam_inner=li, lam_k=lam_k, e1_bound=lo + li,
        e2_bound=None if lam is None else lam**2 + 3 * lam_k,
        e2_collision_bound=coll, e1=e1, e2=e2, e2_cross=e2c,
    )
