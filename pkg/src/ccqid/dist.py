"""Sparse finite probability distributions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .config import get_tolerances


class NormalizationError(ValueError):
    pass


def _norm_label(label):
    if isinstance(label, (list, np.ndarray)):
        return tuple(int(v) for v in label)
    if isinstance(label, np.integer):
        return int(label)
    return label


@dataclass(frozen=True)
class Distribution:
    """Weights on an explicit support of hashable labels.

    Labels for k-fold alphabets are tuples of symbol indices.
    """

    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        support = tuple(_norm_label(s) for s in self.support)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(support) != len(w):
            raise ValueError("support and weights differ in length")
        if len(support) == 0:
            raise ValueError("empty distribution")
        if len(set(support)) != len(support):
            raise ValueError("support labels must be distinct")
        tol = get_tolerances().distribution
        if np.any(~np.isfinite(w)) or np.any(w < -tol):
            raise NormalizationError("weights must be finite and nonnegative")
        total = float(np.sum(w))
        if abs(total - 1.0) > tol:
            raise NormalizationError(f"weights sum to {total!r}, not 1")
        w = np.clip(w, 0.0, None)
        w.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point(cls, label: Hashable) -> "Distribution":
        return cls((label,), np.ones(1))

    @classmethod
    def uniform(cls, labels: Sequence) -> "Distribution":
        """Uniform law on ``labels``; repeated labels accumulate mass."""
        acc: dict = {}
        for lab in labels:
            lab = _norm_label(lab)
            acc[lab] = acc.get(lab, 0) + 1
        n = sum(acc.values())
        return cls(tuple(acc), np.array([c / n for c in acc.values()]))

    @classmethod
    def from_dense(cls, weights, labels: Sequence | None = None, drop_zeros: bool = False):
        w = np.asarray(weights, dtype=float).reshape(-1)
        labels = list(range(len(w))) if labels is None else list(labels)
        if drop_zeros:
            keep = [i for i in range(len(w)) if w[i] > 0]
            labels = [labels[i] for i in keep]
            w = w[keep]
        return cls(tuple(labels), w)

    def __len__(self) -> int:
        return len(self.support)

    def items(self):
        return zip(self.support, self.weights)

    def prob(self, label) -> float:
        try:
            return float(self.weights[self.support.index(_norm_label(label))])
        except ValueError:
            return 0.0

    def dense(self, labels: Sequence) -> np.ndarray:
        index = {lab: i for i, lab in enumerate(_norm_label(l) for l in labels)}
        out = np.zeros(len(index))
        for lab, w in self.items():
            if lab not in index:
                raise ValueError(f"label {lab!r} outside the given label set")
            out[index[lab]] += w
        return out

    def to_json(self) -> dict:
        def enc(lab):
            return list(lab) if isinstance(lab, tuple) else lab

        return {"support": [enc(s) for s in self.support], "weights": [float(w) for w in self.weights]}

    @classmethod
    def from_json(cls, data: dict) -> "Distribution":
        return cls(tuple(_norm_label(s) for s in data["support"]), np.asarray(data["weights"], dtype=float))


def as_distribution(p, labels: Sequence | None = None) -> Distribution:
    if isinstance(p, Distribution):
        return p
    return Distribution.from_dense(p, labels)
