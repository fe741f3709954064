"""Finite-blocklength rate regions over product input distributions.

``Ck`` collects pairs ``(I(A;C), I(B;C)) / k`` and ``Rk`` collects triples
``(I(A;C|B), I(B;C|A), I(AB;C)) / k`` evaluated at the channel state of
``p1 ⊗ p2``.  A region is stored as its list of nondominated bound tuples;
membership treats each tuple as the downward closed set it bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channels import CCQChannel, channel_state, extend_memoryless
from .coding import TransmissionCode, avg_error
from .config import get_tolerances
from .dist import Distribution, as_distribution
from .info import _clamp, conditional_quantum_mi, quantum_mi
from .linalg import partial_trace, von_neumann_entropy

CK = "Ck"
RK = "Rk"


class BudgetExceededError(RuntimeError):
    """The requested sweep needs more grid points than the configured budget."""


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self):
        for v in (self.r1, self.r2):
            if not math.isfinite(v) or v < 0:
                raise ValueError("rates must be finite and nonnegative")


# -- point evaluation ---------------------------------------------------------------


def eval_ck_point(wk: CCQChannel, p1, p2) -> tuple[float, float]:
    """``(I(A;C), I(B;C)) / k`` at the channel state of ``p1 ⊗ p2``."""
    g = channel_state(wk, p1, p2)
    return quantum_mi(g, "A", "C") / wk.k, quantum_mi(g, "B", "C") / wk.k


def eval_rk_point(wk: CCQChannel, p1, p2) -> tuple[float, float, float]:
    """``(I(A;C|B), I(B;C|A), I(AB;C)) / k`` at the channel state of ``p1 ⊗ p2``."""
    g = channel_state(wk, p1, p2)
    return (conditional_quantum_mi(g, "A", "C", "B") / wk.k,
            conditional_quantum_mi(g, "B", "C", "A") / wk.k,
            quantum_mi(g, ["A", "B"], "C") / wk.k)


class _Evaluator:
    """Vectorised bound evaluation from dense weight vectors."""

    def __init__(self, wk: CCQChannel):
        self.k = wk.k
        self.W = wk.dense_outputs()
        xs, ys = wk.inputs_x, wk.inputs_y
        self.SW = np.array([[wk.output_entropy(x, y) for y in ys] for x in xs])

    def _terms(self, p1, p2):
        S = lambda r: von_neumann_entropy(r, validate=False)
        mix_y = np.einsum("y,xyij->xij", p2, self.W)  # Σ_y p2 W(x, y) for each x
        mix_x = np.einsum("x,xyij->yij", p1, self.W)
        total = np.einsum("x,xij->ij", p1, mix_y)
        s_c = S(total)
        s_cond_a = sum(a * S(mix_y[i]) for i, a in enumerate(p1) if a > 0)
        s_cond_b = sum(b * S(mix_x[j]) for j, b in enumerate(p2) if b > 0)
        s_cond_ab = float(p1 @ self.SW @ p2)
        return s_c, s_cond_a, s_cond_b, s_cond_ab

    def __call__(self, kind: str, p1, p2) -> tuple:
        s_c, s_a, s_b, s_ab = self._terms(p1, p2)
        if kind == CK:
            vals = (s_c - s_a, s_c - s_b)
        else:
            vals = (s_b - s_ab, s_a - s_ab, s_c - s_ab)
        return tuple(_clamp(v, "mutual information") / self.k for v in vals)


# -- region sweep ---------------------------------------------------------------------


def compositions(n: int, steps: int):
    """All weight vectors on ``n`` points with entries in multiples of ``1/steps``."""
    for bars in itertools.combinations(range(steps + n - 1), n - 1):
        prev, parts = -1, []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(steps + n - 2 - prev)
        yield np.array(parts, dtype=float) / steps


def grid_size(n: int, steps: int) -> int:
    return math.comb(steps + n - 1, n - 1)


def _dominates(u, v, tol=0.0) -> bool:
    """``u >= v`` componentwise within ``tol``."""
    return all(a >= b - tol for a, b in zip(u, v))


def pareto_front(points) -> list[int]:
    """Indices of nondominated tuples, sorted lexicographically by value (duplicates kept once).

    Values are compared after rounding to 12 decimals so that rounding noise
    in the entropies does not keep near-duplicates on the frontier.
    """
    snapped = [tuple(round(float(v), 12) for v in p) for p in points]
    order = sorted(range(len(points)), key=lambda i: tuple(-v for v in snapped[i]))
    front: list[int] = []
    for i in order:
        p = snapped[i]
        if any(_dominates(snapped[j], p) for j in front):
            continue
        front.append(i)
    return sorted(front, key=lambda i: snapped[i])


@dataclass
class RateRegion:
    kind: str
    k: int
    resolution: float
    support_points: list = field(repr=False)  # (p1, p2, bound tuple)
    frontier: list
    frontier_index: list = field(repr=False, default_factory=list)
    grid_points: int = 0
    refinement_steps: int = 0

    @property
    def frontier_inputs(self) -> list:
        return [(self.support_points[i][0], self.support_points[i][1]) for i in self.frontier_index]

    def max_r1(self) -> float:
        return max((f[0] for f in self.frontier), default=0.0)

    def max_r2(self) -> float:
        return max((f[1] for f in self.frontier), default=0.0)

    def max_sum(self) -> float:
        """Largest achievable ``R1 + R2`` over the region."""
        if self.kind == CK:
            return max((f[0] + f[1] for f in self.frontier), default=0.0)
        return max((min(f[0] + f[1], f[2]) for f in self.frontier), default=0.0)


def _refine(ev: _Evaluator, kind: str, p1, p2, val, start: float, floor: float, max_moves: int = 10_000):
    """Pareto coordinate-pair exchange ascent with step halving.

    A move shifts ``step`` mass between two coordinates of one input law and
    is taken when the new bound tuple weakly dominates the old one and
    strictly improves some coordinate.
    """
    visited = []
    step, moves = start, 0
    while step >= floor and moves < max_moves:
        improved = False
        for which in (0, 1):
            p = p1 if which == 0 else p2
            for i, j in itertools.permutations(range(len(p)), 2):
                if p[i] < step:
                    continue
                q = p.copy()
                q[i] -= step
                q[j] += step
                q = np.clip(q, 0.0, None)
                cand = (q, p2) if which == 0 else (p1, q)
                new = ev(kind, *cand)
                moves += 1
                if _dominates(new, val) and any(a > b + 1e-12 for a, b in zip(new, val)):
                    p1, p2 = cand
                    val = new
                    visited.append((p1.copy(), p2.copy(), val))
                    improved = True
                    break
            if improved:
                break
        if not improved:
            step /= 2
    return visited, moves


def compute_region(wk: CCQChannel, k: int | None = None, resolution: float = 0.05, kind: str = RK,
                   refine: bool = True, floor: float = 1e-4) -> RateRegion:
    """Sweep product input laws on a simplex grid, polish the frontier, return the region.

    ``wk`` may be the single-letter channel (extended to block length ``k``)
    or an already extended one.  The grid uses ``round(1 / resolution)``
    steps per unit; the number of grid pairs is checked against the
    configured budget before any evaluation.
    """
    if kind not in (CK, RK):
        raise ValueError(f"kind must be {CK!r} or {RK!r}")
    if not 0.0 < resolution <= 0.5:
        raise ValueError("resolution must lie in (0, 0.5]")
    if k is not None and k != wk.k:
        if wk.k != 1:
            raise ValueError(f"channel already has block length {wk.k}")
        wk = extend_memoryless(wk, k)
    steps = max(1, round(1.0 / resolution))
    nx, ny = len(wk.inputs_x), len(wk.inputs_y)
    total = grid_size(nx, steps) * grid_size(ny, steps)
    budget = get_tolerances().grid_budget
    if total > budget:
        raise BudgetExceededError(f"grid of {total} input pairs exceeds the budget of {budget}")
    ev = _Evaluator(wk)
    grid_y = list(compositions(ny, steps))
    points = []
    for p1 in compositions(nx, steps):
        for p2 in grid_y:
            points.append((p1, p2, ev(kind, p1, p2)))
    n_grid = len(points)
    moves = 0
    if refine:
        seeds = pareto_front([v for _, _, v in points])
        for i in seeds:
            p1, p2, val = points[i]
            found, used = _refine(ev, kind, p1, p2, val, 1.0 / steps, floor)
            points.extend(found)
            moves += used
    front = pareto_front([v for _, _, v in points])
    return RateRegion(kind, wk.k, resolution, points, [points[i][2] for i in front], front, n_grid, moves)


def region_contains(region: RateRegion, p: RatePair, slack: float = 0.0) -> bool:
    """Whether ``p`` lies under some frontier tuple, within ``slack`` per constraint."""
    if slack < 0:
        raise ValueError("slack must be nonnegative")
    for f in region.frontier:
        if p.r1 <= f[0] + slack and p.r2 <= f[1] + slack:
            if region.kind == CK or p.r1 + p.r2 <= f[2] + slack:
                return True
    return False


# -- containment and subadditivity -------------------------------------------------------


@dataclass
class ContainmentReport:
    checked: int
    violations: list
    max_excess: float

    @property
    def ok(self) -> bool:
        return not self.violations


def containment_check(wk: CCQChannel, k: int | None = None, resolution: float = 0.1,
                      tol: float = 1e-8) -> ContainmentReport:
    """At every grid law, the Ck pair must sit under the Rk triple (each rate and the sum)."""
    if k is not None and k != wk.k:
        wk = extend_memoryless(wk, k)
    steps = max(1, round(1.0 / resolution))
    nx, ny = len(wk.inputs_x), len(wk.inputs_y)
    total = grid_size(nx, steps) * grid_size(ny, steps)
    if total > get_tolerances().grid_budget:
        raise BudgetExceededError(f"grid of {total} input pairs exceeds the budget")
    ev = _Evaluator(wk)
    grid_y = list(compositions(ny, steps))
    violations, worst, n = [], 0.0, 0
    for p1 in compositions(nx, steps):
        for p2 in grid_y:
            n += 1
            a, b = ev(CK, p1, p2)
            c, d, e = ev(RK, p1, p2)
            excess = max(a - c, b - d, a + b - e)
            worst = max(worst, excess)
            if excess > tol:
                violations.append({"p1": p1.tolist(), "p2": p2.tolist(), "ck": [a, b], "rk": [c, d, e]})
    return ContainmentReport(n, violations, worst)


def mi_inequalities(wk: CCQChannel, p1, p2) -> dict:
    """``I(A;C) <= I(A;C|B)``, ``I(B;C) <= I(B;C|A)`` and ``I(A;C) + I(B;C) <= I(AB;C)``.

    Returned values are the slacks (right minus left); they are nonnegative
    for independent inputs.
    """
    a, b = eval_ck_point(wk, p1, p2)
    c, d, e = eval_rk_point(wk, p1, p2)
    return {"a_given_b": c - a, "b_given_a": d - b, "sum": e - a - b}


@dataclass
class SubadditivityReport:
    lhs: float
    per_instance: tuple
    rhs: float
    rhs_first_doubled: float
    joint_lhs: float
    joint_rhs: float
    ok: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _pair_marginals(p: Distribution, n: int) -> tuple[np.ndarray, np.ndarray]:
    m1, m2 = np.zeros(n), np.zeros(n)
    for (a, b), w in p.items():
        m1[a] += w
        m2[b] += w
    return m1, m2


def subadditivity_check(w: CCQChannel, p1, p2, tol: float = 1e-8) -> SubadditivityReport:
    """``I(A²;C²) <= I(A1;C1) + I(A2;C2)`` on two uses of a memoryless channel.

    ``p1`` may correlate the two x-inputs; ``p2`` must be a product over the
    two uses (otherwise the shared y-input can carry information about x
    across uses and the inequality need not hold).  The single-use terms
    come from the explicit state restricted by partial trace.
    """
    if w.k != 1:
        raise ValueError("pass the single-letter channel")
    w2 = extend_memoryless(w, 2)
    p1 = as_distribution(p1, w2.inputs_x)
    p2 = as_distribution(p2, w2.inputs_y)
    nx, ny, d = len(w.x_alphabet), len(w.y_alphabet), w.base_dim
    q1, q2 = _pair_marginals(p2, ny)
    prod = Distribution.from_dense(np.outer(q1, q2).ravel(), list(w2.inputs_y))
    if np.max(np.abs(prod.dense(w2.inputs_y) - p2.dense(w2.inputs_y))) > 1e-9:
        raise ValueError("the y-inputs must be independent across the two uses")
    g = channel_state(w2, p1, p2)
    lhs = quantum_mi(g, "A", "C")
    joint_lhs = quantum_mi(g, ["A", "B"], "C")
    rho = g.dense()
    # factor order: A1 A2 B1 B2 C1 C2
    dims = [nx, nx, ny, ny, d, d]
    S = lambda keep: von_neumann_entropy(partial_trace(rho, dims, keep), validate=False)
    single, joint = [], []
    for i in (0, 1):
        a, b, c = i, 2 + i, 4 + i
        single.append(_clamp(S([a]) + S([c]) - S([a, c]), "single-use mutual information"))
        joint.append(_clamp(S([a, b]) + S([c]) - S([a, b, c]), "single-use mutual information"))
    rhs = sum(single)
    return SubadditivityReport(lhs, tuple(single), rhs, 2 * single[0], joint_lhs, sum(joint),
                               bool(lhs <= rhs + tol and joint_lhs <= sum(joint) + tol))


def fano_check(c: TransmissionCode, wk: CCQChannel, tol: float = 1e-6) -> tuple[float, float, bool]:
    """``(1 - ε) log2(MN) - 1 <= I(A^k B^k; C^k)`` at uniform codeword laws.

    Returns ``(lhs, rhs, ok)`` with ``ε`` the average error of ``c``.
    """
    eps = avg_error(c, wk)
    lhs = (1.0 - eps) * math.log2(c.M * c.N) - 1.0
    g = channel_state(wk, Distribution.uniform(c.codewords_x), Distribution.uniform(c.codewords_y))
    rhs = quantum_mi(g, ["A", "B"], "C")
    return lhs, rhs, bool(lhs <= rhs + tol)
