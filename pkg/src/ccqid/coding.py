"""Transmission and identification codes for CCQ channels and their error functionals.

Decoders of a transmission code are stored as an array ``(M, N, D, D)``
indexed by the message pair, plus an optional failure effect that
completes the POVM.  Error functionals never read the failure effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import CCQChannel, CQChannel, canonical, mix_output
from .config import get_tolerances
from .dist import Distribution
from .linalg import POVM, DimensionError, InvalidStateError, as_matrix, effect_violations

FAILURE = "failure"


class DegenerateCodeError(ValueError):
    """The requested quantity is undefined for this code (e.g. e2 with one message)."""


class NotSimultaneousError(ValueError):
    """No common refinement is known for a family of identifiers."""


def _complete(ops: np.ndarray, failure) -> tuple[np.ndarray, np.ndarray | None]:
    d = ops.shape[-1]
    flat = ops.reshape(-1, d, d)
    total = flat.sum(axis=0)
    if failure is None:
        if np.max(np.abs(total - np.eye(d))) <= get_tolerances().povm_sum:
            return ops, None
        failure = np.eye(d) - total
    return ops, as_matrix(failure)


def _validate_povm(ops: np.ndarray, failure, labels):
    d = ops.shape[-1]
    flat = list(ops.reshape(-1, d, d))
    if failure is not None:
        flat.append(failure)
        labels = labels + [FAILURE]
    POVM(np.array(flat), tuple(labels)).validate()


@dataclass
class TransmissionCode:
    """A ``(k, M, N)`` code: codewords for both senders and a decoder POVM."""

    k: int
    codewords_x: list
    codewords_y: list
    decoders: np.ndarray
    failure: np.ndarray | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.codewords_x = [canonical(c) for c in self.codewords_x]
        self.codewords_y = [canonical(c) for c in self.codewords_y]
        ops = np.asarray(self.decoders, dtype=complex)
        M, N = len(self.codewords_x), len(self.codewords_y)
        if M == 0 or N == 0:
            raise ValueError("a code needs at least one codeword per sender")
        if ops.ndim != 4 or ops.shape[:2] != (M, N) or ops.shape[2] != ops.shape[3]:
            raise DimensionError(f"decoders must have shape ({M}, {N}, D, D), got {ops.shape}")
        if any(len(c) != self.k for c in self.codewords_x + self.codewords_y):
            raise DimensionError(f"codewords must have length k={self.k}")
        self.decoders, self.failure = _complete(ops, self.failure)
        if self.validate:
            _validate_povm(self.decoders, self.failure, [(m, n) for m in range(M) for n in range(N)])

    @property
    def M(self) -> int:
        return len(self.codewords_x)

    @property
    def N(self) -> int:
        return len(self.codewords_y)

    @property
    def dim(self) -> int:
        return self.decoders.shape[-1]

    def povm(self) -> POVM:
        d = self.dim
        labels = [(m, n) for m in range(self.M) for n in range(self.N)]
        els = list(self.decoders.reshape(-1, d, d))
        if self.failure is not None:
            els.append(self.failure)
            labels.append(FAILURE)
        return POVM(np.array(els), tuple(labels))

    def rates(self) -> "RateReport":
        return rate_report(self.k, self.M, self.N)


@dataclass
class CQCode:
    """Single-sender ``(k, M)`` transmission code."""

    k: int
    codewords: list
    decoders: np.ndarray
    failure: np.ndarray | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.codewords = [canonical(c) for c in self.codewords]
        ops = np.asarray(self.decoders, dtype=complex)
        if ops.ndim != 3 or ops.shape[0] != len(self.codewords) or not self.codewords:
            raise DimensionError("need one decoder per codeword")
        self.decoders, self.failure = _complete(ops, self.failure)
        if self.validate:
            _validate_povm(self.decoders, self.failure, list(range(len(self.codewords))))

    @property
    def M(self) -> int:
        return len(self.codewords)

    @property
    def dim(self) -> int:
        return self.decoders.shape[-1]


@dataclass
class SimultaneousStructure:
    """Refinement POVM ``E_rs`` with subsets ``A_m`` of row labels and ``B_n`` of column labels."""

    refinement: POVM
    subsets_a: list
    subsets_b: list

    def __post_init__(self):
        self.subsets_a = [frozenset(a) for a in self.subsets_a]
        self.subsets_b = [frozenset(b) for b in self.subsets_b]
        if self.refinement.labels is None:
            raise ValueError("refinement elements must be labelled by pairs (r, s)")

    def reconstruct(self, m: int, n: int) -> np.ndarray:
        A, B = self.subsets_a[m], self.subsets_b[n]
        d = self.refinement.dim
        acc = np.zeros((d, d), dtype=complex)
        for i, lab in enumerate(self.refinement.labels):
            if isinstance(lab, tuple) and len(lab) == 2 and lab[0] in A and lab[1] in B:
                acc += self.refinement.elements[i]
        return acc


@dataclass
class IDCode:
    """A ``(k, M, N)`` identification code with sparse input distributions."""

    k: int
    dists_x: list
    dists_y: list
    identifiers: np.ndarray
    structure: SimultaneousStructure | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        ids = np.asarray(self.identifiers, dtype=complex)
        M, N = len(self.dists_x), len(self.dists_y)
        if M == 0 or N == 0:
            raise ValueError("an ID code needs at least one message per sender")
        if ids.ndim != 4 or ids.shape[:2] != (M, N):
            raise DimensionError(f"identifiers must have shape ({M}, {N}, D, D), got {ids.shape}")
        self.identifiers = ids
        for d in list(self.dists_x) + list(self.dists_y):
            if not isinstance(d, Distribution):
                raise TypeError("ID code distributions must be Distribution instances")
            if any(len(canonical(s)) != self.k for s in d.support):
                raise DimensionError(f"support strings must have length k={self.k}")
        if self.validate:
            bad = []
            for m in range(M):
                for n in range(N):
                    bad += [f"I[{m},{n}]: {v}" for v in effect_violations(ids[m, n])]
            if bad:
                raise InvalidStateError("invalid identifiers: " + "; ".join(bad), bad)

    @property
    def M(self) -> int:
        return len(self.dists_x)

    @property
    def N(self) -> int:
        return len(self.dists_y)

    @property
    def dim(self) -> int:
        return self.identifiers.shape[-1]

    def rates(self) -> "RateReport":
        return rate_report(self.k, self.M, self.N)

    def restrict(self, keep_m: Sequence[int], keep_n: Sequence[int]) -> "IDCode":
        """Sub-code on the listed messages (structure subsets follow along)."""
        keep_m, keep_n = list(keep_m), list(keep_n)
        structure = None
        if self.structure is not None:
            structure = SimultaneousStructure(self.structure.refinement,
                                              [self.structure.subsets_a[m] for m in keep_m],
                                              [self.structure.subsets_b[n] for n in keep_n])
        return IDCode(self.k, [self.dists_x[m] for m in keep_m], [self.dists_y[n] for n in keep_n],
                      self.identifiers[np.ix_(keep_m, keep_n)], structure, validate=False)


@dataclass
class CQIDCode:
    """Randomized single-sender ``(k, M)`` ID code."""

    k: int
    dists: list
    identifiers: np.ndarray

    def __post_init__(self):
        self.identifiers = np.asarray(self.identifiers, dtype=complex)
        if self.identifiers.ndim != 3 or self.identifiers.shape[0] != len(self.dists):
            raise DimensionError("need one identifier per distribution")

    @property
    def M(self) -> int:
        return len(self.dists)


@dataclass(frozen=True)
class RateReport:
    r1_transmission: float
    r2_transmission: float
    r1_id: float | None
    r2_id: float | None

    def as_dict(self) -> dict:
        return {"r1_transmission": self.r1_transmission, "r2_transmission": self.r2_transmission,
                "r1_id": self.r1_id, "r2_id": self.r2_id}


def rate_report(k: int, M: int, N: int) -> RateReport:
    """Transmission rates ``log M / k`` and ID rates ``log log M / k`` (ID rates need M >= 2)."""
    return RateReport(
        math.log2(M) / k,
        math.log2(N) / k,
        math.log2(math.log2(M)) / k if M >= 2 else None,
        math.log2(math.log2(N)) / k if N >= 2 else None,
    )


# -- transmission errors -----------------------------------------------------


def _check_compatible(code, wk) -> None:
    if code.dim != wk.dim:
        raise DimensionError(f"code dimension {code.dim} differs from channel dimension {wk.dim}")
    if getattr(code, "k", wk.k) != getattr(wk, "k", code.k):
        raise DimensionError(f"code block length {code.k} differs from channel block length {wk.k}")


def success_matrix(c: TransmissionCode, wk: CCQChannel) -> np.ndarray:
    """``S[m, n] = tr(D_mn W^k(x_m, y_n))``."""
    _check_compatible(c, wk)
    S = np.empty((c.M, c.N))
    for m, x in enumerate(c.codewords_x):
        for n, y in enumerate(c.codewords_y):
            S[m, n] = np.real(np.sum(c.decoders[m, n] * wk.output(x, y).T))
    return np.clip(S, 0.0, 1.0)


def avg_error(c: TransmissionCode, wk: CCQChannel) -> float:
    return float(min(max(1.0 - np.mean(success_matrix(c, wk)), 0.0), 1.0))


def max_error(c: TransmissionCode, wk: CCQChannel) -> float:
    return float(np.max(1.0 - success_matrix(c, wk)))


def cq_message_errors(c: CQCode, w: CQChannel) -> np.ndarray:
    if c.dim != w.dim:
        raise DimensionError(f"code dimension {c.dim} differs from channel dimension {w.dim}")
    return np.array([1.0 - min(max(np.real(np.sum(c.decoders[m] * w.output(x).T)), 0.0), 1.0)
                     for m, x in enumerate(c.codewords)])


def cq_avg_error(c: CQCode, w: CQChannel) -> float:
    return float(np.mean(cq_message_errors(c, w)))


def cq_max_error(c: CQCode, w: CQChannel) -> float:
    return float(np.max(cq_message_errors(c, w)))


# -- identification errors ---------------------------------------------------


def _input_mixtures(c: IDCode, wk: CCQChannel) -> np.ndarray:
    """``rho[m, n] = Σ P_m(x) Q_n(y) W^k(x, y)``."""
    _check_compatible(c, wk)
    d = wk.dim
    rho = np.zeros((c.M, c.N, d, d), dtype=complex)
    for m, P in enumerate(c.dists_x):
        for n, Q in enumerate(c.dists_y):
            for x, a in P.items():
                for y, b in Q.items():
                    if a * b:
                        rho[m, n] += (a * b) * wk.output(x, y)
    return rho


def acceptance_matrix(c: IDCode, wk: CCQChannel) -> np.ndarray:
    """``T[m, n, m', n'] = Σ P_m Q_n tr(I_{m'n'} W^k)``, clamped to [0, 1]."""
    rho = _input_mixtures(c, wk)
    T = np.real(np.einsum("mnij,abji->mnab", rho, c.identifiers))
    return np.clip(T, 0.0, 1.0)


def id_error_1(c: IDCode, wk: CCQChannel, T: np.ndarray | None = None) -> float:
    """Missed identification: max over (m, n) of ``1 - Σ P_m Q_n tr(I_mn W)``."""
    T = acceptance_matrix(c, wk) if T is None else T
    diag = np.array([[T[m, n, m, n] for n in range(c.N)] for m in range(c.M)])
    return float(np.max(1.0 - diag))


def id_error_2(c: IDCode, wk: CCQChannel, T: np.ndarray | None = None) -> float:
    """False identification: max over ordered pairs ``(m, n) != (m', n')``."""
    if c.M * c.N < 2:
        raise DegenerateCodeError("e2 is undefined for a code with a single message pair")
    T = acceptance_matrix(c, wk) if T is None else T
    mask = np.ones(T.shape, dtype=bool)
    for m in range(c.M):
        for n in range(c.N):
            mask[m, n, m, n] = False
    return float(np.max(T[mask]))


def id_error_2_cross(c: IDCode, wk: CCQChannel, T: np.ndarray | None = None) -> float:
    """False identification restricted to pairs with ``m != m'`` and ``n != n'``."""
    if c.M < 2 or c.N < 2:
        raise DegenerateCodeError("cross-pair e2 needs at least two messages per sender")
    T = acceptance_matrix(c, wk) if T is None else T
    mask = np.ones(T.shape, dtype=bool)
    for m in range(c.M):
        mask[m, :, m, :] = False
    for n in range(c.N):
        mask[:, n, :, n] = False
    return float(np.max(T[mask]))


def cq_id_errors(c: CQIDCode, w: CQChannel) -> tuple[float, float]:
    """(e1, e2) of a single-sender ID code."""
    if c.M < 2:
        raise DegenerateCodeError("e2 needs at least two messages")
    rho = [mix_output(w, P) for P in c.dists]
    T = np.clip(np.real(np.einsum("mij,aji->ma", np.array(rho), c.identifiers)), 0.0, 1.0)
    e1 = float(np.max(1.0 - np.diag(T)))
    off = T[~np.eye(c.M, dtype=bool)]
    return e1, float(np.max(off))


# -- simultaneity ------------------------------------------------------------------


def check_simultaneous(c: IDCode, s: SimultaneousStructure) -> tuple[bool, float]:
    """Whether every identifier is the stated subset-sum of the refinement; max residual."""
    if len(s.subsets_a) != c.M or len(s.subsets_b) != c.N or s.refinement.dim != c.dim:
        return False, float("inf")
    residual = 0.0
    for m in range(c.M):
        for n in range(c.N):
            residual = max(residual, float(np.max(np.abs(s.reconstruct(m, n) - c.identifiers[m, n]))))
    povm_ok = not s.refinement.violations()
    return bool(povm_ok and residual <= get_tolerances().simultaneous), residual


def common_refinement(c: IDCode) -> POVM:
    """A POVM whose subset-sums give every identifier of ``c``.

    Uses the code's declared structure when present; identifiers that
    already form a POVM are their own refinement, and a single identifier
    ``D`` is refined by ``{D, 1 - D}``.
    """
    if c.structure is not None:
        ok, residual = check_simultaneous(c, c.structure)
        if not ok:
            raise NotSimultaneousError(f"declared structure does not reconstruct identifiers (residual {residual:.3g})")
        return c.structure.refinement
    d = c.dim
    flat = c.identifiers.reshape(-1, d, d)
    labels = tuple((m, n) for m in range(c.M) for n in range(c.N))
    if np.max(np.abs(flat.sum(axis=0) - np.eye(d))) <= get_tolerances().povm_sum:
        return POVM(flat, labels).validate()
    if len(flat) == 1:
        from .info import binary_povm

        return binary_povm(flat[0])
    raise NotSimultaneousError("identifiers carry no simultaneous structure; refinement undefined")


def transmission_as_id_code(c: TransmissionCode) -> IDCode:
    """Point-mass distributions on the codewords and ``I_mn = D_mn``."""
    d = c.dim
    els, labels = [], []
    for m in range(c.M):
        for n in range(c.N):
            els.append(c.decoders[m, n])
            labels.append((m, n))
    if c.failure is not None:
        els.append(c.failure)
        labels.append((c.M, c.N))
    structure = SimultaneousStructure(POVM(np.array(els).reshape(-1, d, d), tuple(labels)),
                                      [{m} for m in range(c.M)], [{n} for n in range(c.N)])
    return IDCode(c.k, [Distribution.point(x) for x in c.codewords_x],
                  [Distribution.point(y) for y in c.codewords_y], c.decoders.copy(), structure)
