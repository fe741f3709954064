"""Classical and quantum information quantities (all in bits)."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .channels import ChannelState, ClassicalChannel, CQChannel, cq_channel_state, mix_output
from .config import get_tolerances
from .dist import Distribution, as_distribution
from .linalg import POVM, DimensionError, InvalidStateError, as_matrix, effect_violations, von_neumann_entropy


class NumericalIntegrityError(ArithmeticError):
    """A quantity that must be nonnegative came out clearly negative."""


def _clamp(value: float, what: str) -> float:
    if value < -get_tolerances().mi_clamp:
        raise NumericalIntegrityError(f"{what} = {value:.3g} is negative beyond tolerance")
    return float(value) if value > 0 else 0.0


def shannon_entropy(p) -> float:
    w = p.weights if isinstance(p, Distribution) else np.asarray(p, dtype=float).reshape(-1)
    w = w[w > 0]
    return float(max(-np.sum(w * np.log2(w)), 0.0)) + 0.0 if w.size else 0.0


def classical_mi(joint) -> float:
    """``H(X) + H(Z) - H(X, Z)`` of a joint probability matrix."""
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2:
        raise DimensionError("joint distribution must be a matrix")
    tol = get_tolerances().distribution
    if np.any(j < -tol) or abs(j.sum() - 1.0) > tol:
        raise ValueError("joint distribution must be nonnegative and sum to 1")
    j = np.clip(j, 0.0, None)
    mi = shannon_entropy(j.sum(axis=1)) + shannon_entropy(j.sum(axis=0)) - shannon_entropy(j.ravel())
    return _clamp(mi, "classical mutual information")


def induced_distribution(rho, e: POVM) -> Distribution:
    """Outcome law ``i ↦ tr(rho E_i)`` labelled by the POVM labels."""
    probs = np.clip(e.probabilities(rho), 0.0, None)
    residual = abs(float(probs.sum()) - 1.0)
    if residual > 1e-8:
        raise InvalidStateError(f"outcome probabilities sum to 1 only within {residual:.3g}")
    labels = [e.label_of(i) for i in range(len(e))]
    return Distribution(tuple(labels), probs / probs.sum())


def total_variation(p, q) -> float:
    """``d1(p, q) = Σ |p(a) - q(a)|`` (range [0, 2])."""
    if isinstance(p, Distribution) and isinstance(q, Distribution):
        if set(p.support) != set(q.support):
            raise ValueError("distributions live on different supports")
        a, b = p.weights, q.dense(p.support)
    else:
        a = np.asarray(p, dtype=float).reshape(-1)
        b = np.asarray(q, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("distributions live on different supports")
    return float(np.sum(np.abs(a - b)))


def povm_distance(rho, sigma, e: POVM) -> float:
    """Measurement-induced distance ``d_E(rho, sigma)``."""
    return total_variation(induced_distribution(rho, e), induced_distribution(sigma, e))


def binary_povm(d) -> POVM:
    """The two-outcome POVM ``{D, 1 - D}`` for an effect ``0 <= D <= 1``."""
    d = as_matrix(d)
    bad = effect_violations(d)
    if bad:
        raise InvalidStateError("not an effect: " + ", ".join(bad), bad)
    return POVM(np.array([d, np.eye(d.shape[0]) - d]), (0, 1))


def coarse_grain_distance_check(rho, sigma, e: POVM, partition) -> tuple[float, float, bool]:
    """Refined distance ``d_E`` versus the two-outcome coarse-graining ``P(Σ_{A1} E_i)``.

    Returns ``(lhs, rhs, lhs >= rhs - 1e-9)`` with ``lhs`` the refined distance.
    """
    a1, a2 = (set(int(i) for i in part) for part in partition)
    if a1 & a2 or (a1 | a2) != set(range(len(e))):
        raise ValueError("partition must split the outcome indices into two disjoint covering sets")
    d = e.elements[sorted(a1)].sum(axis=0) if a1 else np.zeros((e.dim, e.dim), dtype=complex)
    coarse = POVM(np.array([d, np.eye(e.dim) - d]), (0, 1))
    lhs = povm_distance(rho, sigma, e)
    rhs = povm_distance(rho, sigma, coarse)
    return lhs, rhs, bool(lhs >= rhs - 1e-9)


def _factor_set(f) -> set:
    if isinstance(f, (int, str)):
        return {f}
    return set(f)


def quantum_mi(gamma: ChannelState, part_a, part_c) -> float:
    """``I(A; C) = S(A) + S(C) - S(AC)`` for disjoint factor sets of a channel state."""
    a, c = _factor_set(part_a), _factor_set(part_c)
    ra, rc = gamma._roles(a), gamma._roles(c)
    if ra & rc:
        raise ValueError("factor sets overlap")
    mi = gamma.entropy(ra) + gamma.entropy(rc) - gamma.entropy(ra | rc)
    return _clamp(mi, "quantum mutual information")


def conditional_quantum_mi(gamma: ChannelState, part_a, part_c, part_b) -> float:
    """``I(A; C | B) = S(AB) + S(CB) - S(ABC) - S(B)``."""
    ra, rc, rb = (gamma._roles(_factor_set(f)) for f in (part_a, part_c, part_b))
    if ra & rc or ra & rb or rc & rb:
        raise ValueError("factor sets overlap")
    S = gamma.entropy
    cmi = S(ra | rb) + S(rc | rb) - S(ra | rb | rc) - S(rb)
    return _clamp(cmi, "conditional quantum mutual information")


def holevo(p, w: CQChannel) -> float:
    """``χ(p, W) = S(Σ p W) - Σ p S(W(x))``."""
    p = as_distribution(p, w.inputs)
    avg = von_neumann_entropy(mix_output(w, p), validate=False)
    chi = avg - sum(a * w.output_entropy(x) for x, a in p.items())
    return _clamp(chi, "Holevo quantity")


def holevo_via_state(p, w: CQChannel) -> float:
    return quantum_mi(cq_channel_state(w, p), 0, 1)


def mi_threshold_filter(family: Sequence[Distribution], w: ClassicalChannel, threshold: float) -> list[int]:
    """Indices of distributions whose induced mutual information reaches ``threshold``."""
    keep = []
    for i, p in enumerate(family):
        if classical_mi(w.joint(p)) >= threshold:
            keep.append(i)
    return keep


def filter_counting_check(M: int, removed: Iterable[Iterable[int]]) -> tuple[int, int, bool]:
    """``|∩_j (all \\ Z_j)| >= M - Σ_j |Z_j|`` for removal sets ``Z_j`` of indices in ``range(M)``."""
    removed = [set(z) for z in removed]
    survivors = set(range(M)).difference(*removed) if removed else set(range(M))
    bound = M - sum(len(z) for z in removed)
    return len(survivors), bound, len(survivors) >= bound
