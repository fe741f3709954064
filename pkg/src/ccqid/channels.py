"""Classical-quantum channels, channel states and measurement-induced channels.

A :class:`CCQChannel` is stored by its single-letter outputs ``W(x, y)``;
block extensions are evaluated lazily as tensor products and memoized.
Inputs of a k-fold channel are tuples of symbol indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import get_tolerances
from .dist import Distribution, NormalizationError, as_distribution
from .linalg import (
    POVM,
    DimensionError,
    InvalidStateError,
    as_matrix,
    check_dim_cap,
    partial_trace,
    state_violations,
    tensor,
    von_neumann_entropy,
)

FIX_AVERAGE_X = "fix_average_x"
FIX_AVERAGE_Y = "fix_average_y"


class TupleSpace(Sequence):
    """All length-``k`` tuples over ``range(n)`` in lexicographic order."""

    def __init__(self, n: int, k: int):
        self.n = int(n)
        self.k = int(k)

    def __len__(self) -> int:
        return self.n**self.k

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        out = []
        for _ in range(self.k):
            i, r = divmod(i, self.n)
            out.append(r)
        return tuple(reversed(out))

    def __iter__(self):
        return itertools.product(range(self.n), repeat=self.k)

    def __contains__(self, t) -> bool:
        return isinstance(t, tuple) and len(t) == self.k and all(0 <= s < self.n for s in t)

    def index(self, t) -> int:
        t = canonical(t)
        if t not in self:
            raise ValueError(f"{t!r} is not in the {self.k}-fold alphabet of size {self.n}")
        i = 0
        for s in t:
            i = i * self.n + s
        return i

    def __eq__(self, other) -> bool:
        return isinstance(other, TupleSpace) and (self.n, self.k) == (other.n, other.k)

    def __repr__(self) -> str:
        return f"TupleSpace(n={self.n}, k={self.k})"


def canonical(x) -> tuple:
    """Normalise a symbol index or index sequence to a tuple of ints."""
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(v) for v in x)


class CCQChannel:
    """Two classical senders, one quantum receiver, memoryless of block length ``k``."""

    def __init__(self, x_alphabet: Sequence[str], y_alphabet: Sequence[str], outputs, k: int = 1,
                 validate: bool = True):
        self.x_alphabet = tuple(str(s) for s in x_alphabet)
        self.y_alphabet = tuple(str(s) for s in y_alphabet)
        for name, alph in (("x", self.x_alphabet), ("y", self.y_alphabet)):
            if not alph:
                raise ValueError(f"{name} alphabet is empty")
            if len(set(alph)) != len(alph):
                raise ValueError(f"{name} alphabet symbols are not distinct")
        base = np.asarray(outputs, dtype=complex)
        nx, ny = len(self.x_alphabet), len(self.y_alphabet)
        if base.ndim != 4 or base.shape[:2] != (nx, ny) or base.shape[2] != base.shape[3]:
            raise DimensionError(f"outputs must have shape ({nx}, {ny}, d, d), got {base.shape}")
        if k < 1:
            raise ValueError("block length must be positive")
        check_dim_cap(base.shape[2] ** k)
        if validate:
            for x in range(nx):
                for y in range(ny):
                    bad = state_violations(base[x, y])
                    if bad:
                        raise InvalidStateError(
                            f"output ({self.x_alphabet[x]},{self.y_alphabet[y]}): " + ", ".join(bad), bad)
        base.setflags(write=False)
        self.base = base
        self.k = int(k)
        self._cache: dict = {}
        self._entropy_cache: dict = {}

    @classmethod
    def from_function(cls, x_alphabet, y_alphabet, fn: Callable[[int, int], np.ndarray]):
        outs = [[as_matrix(fn(x, y)) for y in range(len(y_alphabet))] for x in range(len(x_alphabet))]
        return cls(x_alphabet, y_alphabet, np.array(outs))

    @property
    def base_dim(self) -> int:
        return self.base.shape[2]

    @property
    def dim(self) -> int:
        return self.base_dim**self.k

    @property
    def inputs_x(self) -> TupleSpace:
        return TupleSpace(len(self.x_alphabet), self.k)

    @property
    def inputs_y(self) -> TupleSpace:
        return TupleSpace(len(self.y_alphabet), self.k)

    def same_family(self, other: "CCQChannel") -> bool:
        return (self.x_alphabet == other.x_alphabet and self.y_alphabet == other.y_alphabet
                and self.base.shape == other.base.shape and np.array_equal(self.base, other.base))

    def output(self, x, y) -> np.ndarray:
        x, y = canonical(x), canonical(y)
        key = (x, y)
        out = self._cache.get(key)
        if out is not None:
            return out
        if x not in self.inputs_x or y not in self.inputs_y:
            raise ValueError(f"input ({x}, {y}) is not a {self.k}-fold input pair")
        out = tensor(*(self.base[a, b] for a, b in zip(x, y)))
        out.setflags(write=False)
        self._cache[key] = out
        return out

    def output_entropy(self, x, y) -> float:
        key = (canonical(x), canonical(y))
        s = self._entropy_cache.get(key)
        if s is None:
            # additivity on product outputs
            s = sum(self._letter_entropy(a, b) for a, b in zip(*key))
            self._entropy_cache[key] = s
        return s

    def _letter_entropy(self, a: int, b: int) -> float:
        key = ("letter", a, b)
        s = self._entropy_cache.get(key)
        if s is None:
            s = von_neumann_entropy(self.base[a, b], validate=False)
            self._entropy_cache[key] = s
        return s

    def dense_outputs(self) -> np.ndarray:
        """All outputs as an array of shape (|X|^k, |Y|^k, D, D)."""
        xs, ys = self.inputs_x, self.inputs_y
        return np.array([[self.output(x, y) for y in ys] for x in xs])

    def __repr__(self) -> str:
        return (f"CCQChannel(|X|={len(self.x_alphabet)}, |Y|={len(self.y_alphabet)}, "
                f"dim={self.base_dim}, k={self.k})")


class CQChannel:
    """Map from a finite input set to density operators, evaluated lazily."""

    def __init__(self, inputs: Sequence, dim: int, fn: Callable, validate: bool = False):
        self.inputs = inputs
        self.dim = int(dim)
        self._fn = fn
        self._cache: dict = {}
        self._validate = validate

    @classmethod
    def from_outputs(cls, labels: Sequence, states, validate: bool = True) -> "CQChannel":
        labels = list(labels)
        states = [as_matrix(s) for s in states]
        if len(labels) != len(states) or not labels:
            raise ValueError("need one state per input label")
        table = dict(zip(labels, states))
        if len(table) != len(labels):
            raise ValueError("input labels must be distinct")
        dim = states[0].shape[0]
        if any(s.shape != (dim, dim) for s in states):
            raise DimensionError("all outputs must share one dimension")
        if validate:
            for lab, s in table.items():
                bad = state_violations(s)
                if bad:
                    raise InvalidStateError(f"output {lab!r}: " + ", ".join(bad), bad)
        return cls(labels, dim, table.__getitem__)

    def _key(self, x):
        if isinstance(self.inputs, TupleSpace):
            return canonical(x)
        return tuple(x) if isinstance(x, list) else x

    def output(self, x) -> np.ndarray:
        x = self._key(x)
        out = self._cache.get(x)
        if out is None:
            out = as_matrix(self._fn(x))
            if out.shape != (self.dim, self.dim):
                raise DimensionError(f"output for {x!r} has shape {out.shape}")
            if self._validate:
                bad = state_violations(out)
                if bad:
                    raise InvalidStateError(f"output {x!r}: " + ", ".join(bad), bad)
            out.setflags(write=False)
            self._cache[x] = out
        return out

    def output_entropy(self, x) -> float:
        key = ("S", self._key(x))
        s = self._cache.get(key)
        if s is None:
            s = von_neumann_entropy(self.output(x), validate=False)
            self._cache[key] = s
        return s

    def __repr__(self) -> str:
        return f"CQChannel(inputs={len(self.inputs)}, dim={self.dim})"


@dataclass(frozen=True)
class ClassicalChannel:
    """Stochastic matrix ``probs[x, z]`` with labelled rows and columns."""

    inputs: tuple
    outputs: tuple
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (len(self.inputs), len(self.outputs)):
            raise DimensionError(f"probs shape {p.shape} does not match labels")
        tol = get_tolerances()
        if np.any(p < -tol.distribution) or np.any(p > 1 + tol.distribution):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-8):
            raise NormalizationError("rows of a classical channel must sum to 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "probs", p)

    def row(self, x) -> np.ndarray:
        return self.probs[self.inputs.index(x)]

    def joint(self, p: Distribution) -> np.ndarray:
        """Joint law ``p(x) W(z|x)`` over the support of ``p``."""
        return np.array([w * self.row(x) for x, w in p.items()])

    def output_distribution(self, p: Distribution) -> np.ndarray:
        return self.joint(p).sum(axis=0)


# -- operations ------------------------------------------------------------------


def extend_memoryless(w: CCQChannel, k: int) -> CCQChannel:
    """k-fold memoryless extension ``W^k(x^k, y^k) = W(x1, y1) ⊗ ... ⊗ W(xk, yk)``."""
    if k < 1:
        raise ValueError("block length must be positive")
    if k == 1:
        return w
    return CCQChannel(w.x_alphabet, w.y_alphabet, w.base, k=w.k * k, validate=False)


def _mix(items, output: Callable, dim: int) -> np.ndarray:
    acc = np.zeros((dim, dim), dtype=complex)
    for label, weight in items:
        if weight:
            acc += weight * output(label)
    return acc


def channel_state(wk: CCQChannel, p1, p2) -> "ChannelState":
    return ChannelState(wk, as_distribution(p1, wk.inputs_x), as_distribution(p2, wk.inputs_y))


def cq_channel_state(w: CQChannel, p) -> "ChannelState":
    return ChannelState(w, as_distribution(p, w.inputs))


def marginal_cq(wk: CCQChannel, other_codewords: Sequence, side: str = FIX_AVERAGE_Y) -> CQChannel:
    """Uniform average over the other sender's codewords.

    ``fix_average_y`` averages over the given y-codewords and yields a channel
    on x-inputs; ``fix_average_x`` is the mirror image.
    """
    words = [canonical(c) for c in other_codewords]
    if not words:
        raise ValueError("need at least one codeword of the other sender")
    if side == FIX_AVERAGE_Y:
        return fix_sender(wk, Distribution.uniform(words), side="y")
    if side == FIX_AVERAGE_X:
        return fix_sender(wk, Distribution.uniform(words), side="x")
    raise ValueError(f"unknown side {side!r}")


def fix_sender(wk: CCQChannel, q, side: str = "y") -> CQChannel:
    """Average one sender's input over ``q``.

    ``side="y"`` gives ``x ↦ Σ_y q(y) W(x, y)``; ``side="x"`` gives
    ``y ↦ Σ_x q(x) W(x, y)``.
    """
    if side == "y":
        q = as_distribution(q, wk.inputs_y)
        for y in q.support:
            if canonical(y) not in wk.inputs_y:
                raise ValueError(f"{y!r} is not a y-input")
        return CQChannel(wk.inputs_x, wk.dim, lambda x: _mix(q.items(), lambda y: wk.output(x, y), wk.dim))
    if side == "x":
        q = as_distribution(q, wk.inputs_x)
        for x in q.support:
            if canonical(x) not in wk.inputs_x:
                raise ValueError(f"{x!r} is not an x-input")
        return CQChannel(wk.inputs_y, wk.dim, lambda y: _mix(q.items(), lambda x: wk.output(x, y), wk.dim))
    raise ValueError(f"unknown side {side!r}")


def mix_output(w: CQChannel, p) -> np.ndarray:
    """``P W = Σ_x P(x) W(x)``."""
    p = as_distribution(p, w.inputs)
    return _mix(p.items(), w.output, w.dim)


def induce_classical(w: CQChannel, e: POVM, inputs: Sequence | None = None) -> ClassicalChannel:
    """Classical channel ``z|x ↦ tr(W(x) E_z)`` (rows optionally restricted to ``inputs``)."""
    if e.dim != w.dim:
        raise DimensionError(f"POVM dim {e.dim} differs from channel dim {w.dim}")
    rows = list(w.inputs) if inputs is None else list(inputs)
    probs = np.array([e.probabilities(w.output(x)) for x in rows]).reshape(len(rows), len(e))
    probs = np.clip(probs, 0.0, 1.0)
    labels = tuple(e.label_of(i) for i in range(len(e)))
    return ClassicalChannel(tuple(w._key(x) for x in rows), labels, probs)


# -- channel states ---------------------------------------------------------------

_ROLE = {"A": 0, "B": 1, "C": 2}


class ChannelState:
    """Classical-quantum state ``Σ p1(x) p2(y) |x><x| ⊗ |y><y| ⊗ W(x, y)``.

    The classical registers are kept implicit (distributions plus block
    structure).  Factors are numbered A=0, B=1, C=2 for a CCQ state and
    A=0, C=1 for a single-sender (CQ) state.
    """

    def __init__(self, channel, p1: Distribution, p2: Distribution | None = None):
        self.channel = channel
        self.p1 = p1
        self.p2 = p2
        if isinstance(channel, CCQChannel):
            if p2 is None:
                raise ValueError("a CCQ channel state needs two input distributions")
            for x in p1.support:
                if canonical(x) not in channel.inputs_x:
                    raise ValueError(f"{x!r} is not an x-input")
            for y in p2.support:
                if canonical(y) not in channel.inputs_y:
                    raise ValueError(f"{y!r} is not a y-input")
            self.factor_dims = [len(channel.inputs_x), len(channel.inputs_y), channel.dim]
        else:
            if p2 is not None:
                raise ValueError("a CQ channel state takes a single distribution")
            self.factor_dims = [len(channel.inputs), channel.dim]
        self._ent: dict = {}

    @property
    def is_ccq(self) -> bool:
        return self.p2 is not None

    @property
    def k(self) -> int:
        return getattr(self.channel, "k", 1)

    @property
    def quantum_factor(self) -> int:
        return len(self.factor_dims) - 1

    def _roles(self, factors) -> frozenset:
        out = set()
        for f in factors:
            f = _ROLE[f] if isinstance(f, str) else int(f)
            if not self.is_ccq and f == 1:
                f = 2
            if f not in (0, 1, 2) or (not self.is_ccq and f == 1):
                raise ValueError(f"unknown factor {f!r}")
            out.add(f)
        return frozenset(out)

    def _output(self, x, y=None) -> np.ndarray:
        return self.channel.output(x, y) if self.is_ccq else self.channel.output(x)

    def _output_entropy(self, x, y=None) -> float:
        return self.channel.output_entropy(x, y) if self.is_ccq else self.channel.output_entropy(x)

    def quantum_marginal(self) -> np.ndarray:
        if self.is_ccq:
            return self._mix_xy(self.p1.items(), self.p2.items())
        return _mix(self.p1.items(), self.channel.output, self.channel.dim)

    def _mix_xy(self, xs, ys) -> np.ndarray:
        ys = list(ys)
        acc = np.zeros((self.channel.dim, self.channel.dim), dtype=complex)
        for x, a in xs:
            for y, b in ys:
                if a * b:
                    acc += (a * b) * self.channel.output(x, y)
        return acc

    def entropy(self, factors) -> float:
        """von Neumann entropy of the reduced state on ``factors`` (bits)."""
        roles = self._roles(factors)
        cached = self._ent.get(roles)
        if cached is not None:
            return cached
        h1 = _shannon(self.p1.weights)
        h2 = _shannon(self.p2.weights) if self.is_ccq else 0.0
        classical = (h1 if 0 in roles else 0.0) + (h2 if 1 in roles else 0.0)
        if 2 not in roles:
            val = classical
        elif not self.is_ccq:
            if 0 in roles:
                val = classical + sum(w * self._output_entropy(x) for x, w in self.p1.items())
            else:
                val = _entropy(self.quantum_marginal())
        elif 0 in roles and 1 in roles:
            val = classical + sum(a * b * self._output_entropy(x, y)
                                  for x, a in self.p1.items() for y, b in self.p2.items())
        elif 0 in roles:
            val = classical + sum(a * _entropy(self._mix_xy([(x, 1.0)], self.p2.items()))
                                  for x, a in self.p1.items())
        elif 1 in roles:
            val = classical + sum(b * _entropy(self._mix_xy(self.p1.items(), [(y, 1.0)]))
                                  for y, b in self.p2.items())
        else:
            val = _entropy(self.quantum_marginal())
        self._ent[roles] = val
        return val

    def dense(self) -> np.ndarray:
        """Explicit density matrix on the full tensor product (refused above the cap)."""
        total = int(np.prod(self.factor_dims))
        check_dim_cap(total)
        d = self.channel.dim
        rho = np.zeros((total, total), dtype=complex)
        if self.is_ccq:
            ny = self.factor_dims[1]
            ix, iy = self.channel.inputs_x, self.channel.inputs_y
            for x, a in self.p1.items():
                for y, b in self.p2.items():
                    blk = (ix.index(x) * ny + iy.index(y)) * d
                    rho[blk:blk + d, blk:blk + d] += a * b * self.channel.output(x, y)
        else:
            inputs = self.channel.inputs
            for x, a in self.p1.items():
                pos = inputs.index(self.channel._key(x)) * d
                rho[pos:pos + d, pos:pos + d] += a * self.channel.output(x)
        return rho

    def reduced(self, keep) -> np.ndarray:
        keep = sorted(self._roles(keep))
        if not self.is_ccq:
            keep = [0 if f == 0 else 1 for f in keep]
        return partial_trace(self.dense(), self.factor_dims, keep)


def _shannon(w) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w))) if w.size else 0.0


def _entropy(rho) -> float:
    return von_neumann_entropy(rho, validate=False)


def classical_marginal_check(state: ChannelState) -> float:
    """Max deviation of the classical registers from ``diag(p1) ⊗ diag(p2)``."""
    keep = [0, 1] if state.is_ccq else [0]
    red = state.reduced(keep)
    if state.is_ccq:
        expected = np.kron(np.diag(state.p1.dense(state.channel.inputs_x)),
                           np.diag(state.p2.dense(state.channel.inputs_y)))
    else:
        expected = np.diag(state.p1.dense(state.channel.inputs))
    return float(np.max(np.abs(red - expected)))


__all__ = [
    "FIX_AVERAGE_X", "FIX_AVERAGE_Y", "CCQChannel", "CQChannel", "ChannelState", "ClassicalChannel",
    "TupleSpace", "canonical", "channel_state", "cq_channel_state", "extend_memoryless", "fix_sender",
    "induce_classical", "marginal_cq", "mix_output", "classical_marginal_check",
]
