"""Finite-dimensional Hermitian linear algebra.

Matrices are plain complex ``numpy`` arrays.  Density operators and POVM
effects are validated with the tolerances of :mod:`ccqid.config`; all
logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import get_tolerances


class DimensionError(ValueError):
    """Operand shapes are incompatible or exceed the dimension cap."""


class InvalidStateError(ValueError):
    """A matrix violates density-operator or POVM-effect invariants."""

    def __init__(self, message: str, violations: Sequence[str] = ()):
        super().__init__(message)
        self.violations = list(violations)


class NotHermitianError(InvalidStateError):
    pass


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def check_dim_cap(dim: int) -> None:
    cap = get_tolerances().dim_cap
    if dim > cap:
        raise DimensionError(f"dimension {dim} exceeds cap {cap}")


def tensor(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    if not mats:
        raise ValueError("tensor needs at least one operand")
    return reduce(np.kron, (as_matrix(m) for m in mats))


def basis_projector(d: int, i: int) -> np.ndarray:
    p = np.zeros((d, d), dtype=complex)
    p[i, i] = 1.0
    return p


def diag_state(p) -> np.ndarray:
    return np.diag(np.asarray(p, dtype=float)).astype(complex)


def partial_trace(rho, factor_dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``.

    Kept factors appear in increasing index order in the result.
    """
    rho = as_matrix(rho)
    dims = [int(d) for d in factor_dims]
    if any(d <= 0 for d in dims):
        raise DimensionError("factor dimensions must be positive")
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise DimensionError(f"state of shape {rho.shape} does not match factors {dims}")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionError(f"factor index out of range in {keep}")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # einsum labels: row index i_f, column index j_f; traced factors share a label
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many tensor factors")
    rows = list(letters[:n])
    cols = [letters[n + f] if f in keep else letters[f] for f in range(n)]
    out = [rows[f] for f in keep] + [cols[f] for f in keep]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out)
    reduced = np.einsum(spec, t)
    d = int(np.prod([dims[f] for f in keep]))
    return reduced.reshape(d, d)


def is_hermitian(h, tol: float | None = None) -> bool:
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        return False
    tol = get_tolerances().hermitian if tol is None else tol
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


# -- eigen-decomposition -----------------------------------------------------


def jacobi_eigh(h, vectors: bool = False, tol: float | None = None, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-solver for a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot ``h[p, q]`` and then
    applies a real Givens rotation.  Iterates until the off-diagonal
    Frobenius norm drops below ``tol`` (scaled by the Frobenius norm of
    ``h`` when that exceeds 1).  Eigenvalues are returned in
    ascending order (with matching eigenvector columns when requested).
    """
    a = np.array(as_matrix(h), dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("jacobi_eigh needs a square matrix")
    tol = get_tolerances().eig_offdiag if tol is None else tol
    tol *= max(1.0, float(np.linalg.norm(a)))
    v = np.eye(n, dtype=complex) if vectors else None

    off_mask = ~np.eye(n, dtype=bool)

    def off_norm():
        # summed directly; ||A||^2 - ||diag||^2 cancels down to sqrt(eps)
        return np.sqrt(np.sum(np.abs(a[off_mask]) ** 2))

    for _ in range(max_sweeps):
        if off_norm() < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                ph = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta  # first-order root, avoids overflow of theta**2
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                phc = np.conj(ph)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * phc * colq
                a[:, q] = s * colp + c * phc * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * ph * rowq
                a[q, :] = s * rowp + c * ph * rowq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                if v is not None:
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = c * vp - s * phc * vq
                    v[:, q] = s * vp + c * phc * vq
    else:
        if off_norm() >= tol:
            raise np.linalg.LinAlgError("Jacobi iteration did not converge")

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    if v is None:
        return w[order]
    return w[order], v[:, order]


def _blocks(h: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the sparsity graph of ``h``."""
    n = h.shape[0]
    nz = np.abs(h) > 0
    np.fill_diagonal(nz, False)
    if not nz.any():
        return [np.array([i]) for i in range(n)]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(nz, 1))):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def hermitian_eig(h, vectors: bool = False):
    """Eigenvalues (ascending) of a Hermitian matrix, optionally with eigenvectors.

    The matrix is first split into the connected components of its
    sparsity pattern, so block-diagonal operators (classical registers)
    only pay for their blocks.
    """
    h = as_matrix(h)
    n = h.shape[0]
    if h.shape != (n, n):
        raise DimensionError("hermitian_eig needs a square matrix")
    if not is_hermitian(h):
        raise NotHermitianError("matrix is not Hermitian", ["hermitian"])
    h = 0.5 * (h + h.conj().T)
    backend = get_tolerances().eig_backend
    w_all = np.empty(n)
    v_all = np.zeros((n, n), dtype=complex) if vectors else None
    for idx in _blocks(h):
        sub = h[np.ix_(idx, idx)]
        if len(idx) == 1:
            w, v = np.array([sub[0, 0].real]), np.ones((1, 1), dtype=complex)
        elif backend == "numpy":
            w, v = np.linalg.eigh(sub)
        else:
            w, v = jacobi_eigh(sub, vectors=True)
        w_all[idx] = w
        if vectors:
            v_all[np.ix_(idx, idx)] = v
    order = np.argsort(w_all, kind="stable")
    if not vectors:
        return w_all[order]
    return w_all[order], v_all[:, order]


# -- states and effects ------------------------------------------------------


def state_violations(rho) -> list[str]:
    """Human-readable list of density-operator invariant violations."""
    tol = get_tolerances()
    m = np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return ["square"]
    if not np.all(np.isfinite(m)):
        return ["finite"]
    out = []
    if not is_hermitian(m, tol.hermitian):
        out.append("hermitian")
        return out
    tr = np.trace(m).real
    if abs(tr - 1.0) > tol.trace:
        out.append(f"unit trace (trace={tr:.12g})")
    w = hermitian_eig(m)
    if w[0] < -tol.psd:
        out.append(f"positive semidefinite (min eigenvalue={w[0]:.3g})")
    return out


def validate_state(rho) -> np.ndarray:
    m = as_matrix(rho)
    bad = state_violations(m)
    if bad:
        raise InvalidStateError("invalid density operator: " + ", ".join(bad), bad)
    return m


def effect_violations(op) -> list[str]:
    """Violations of ``0 <= op <= 1``."""
    tol = get_tolerances()
    m = np.asarray(op)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return ["square"]
    if not is_hermitian(m, tol.hermitian):
        return ["hermitian"]
    w = hermitian_eig(m)
    out = []
    if w[0] < -tol.psd:
        out.append(f"positive semidefinite (min eigenvalue={w[0]:.3g})")
    if w[-1] > 1.0 + tol.upper:
        out.append(f"bounded by identity (max eigenvalue={w[-1]:.12g})")
    return out


def validate_effect(op) -> np.ndarray:
    m = as_matrix(op)
    bad = effect_violations(m)
    if bad:
        raise InvalidStateError("invalid POVM effect: " + ", ".join(bad), bad)
    return m


def von_neumann_entropy(rho, validate: bool = True) -> float:
    """S(rho) = -sum lambda log2 lambda in bits."""
    rho = validate_state(rho) if validate else as_matrix(rho)
    w = hermitian_eig(rho)
    w = np.where((w < 0) & (w >= -get_tolerances().psd), 0.0, w)
    w = w[w > 0]
    return float(max(-np.sum(w * np.log2(w)), 0.0)) + 0.0  # no negative zero


def expectation(rho, op) -> float:
    """tr(rho op), clamped to [0, 1]."""
    rho = as_matrix(rho)
    op = as_matrix(op)
    if rho.shape != op.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {op.shape}")
    val = float(np.real(np.sum(rho * op.T)))
    return min(max(val, 0.0), 1.0)


@dataclass(frozen=True)
class POVM:
    """Ordered family of effects summing to the identity.

    ``elements`` has shape ``(n, d, d)``; ``labels`` is an optional tuple of
    hashable outcome labels (pairs ``(m, n)``, strings, ...).
    """

    elements: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or el.shape[0] == 0:
            raise DimensionError(f"POVM elements must have shape (n, d, d), got {el.shape}")
        el.setflags(write=False)
        object.__setattr__(self, "elements", el)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != el.shape[0]:
                raise ValueError("one label per POVM element required")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_list(cls, mats, labels=None, validate: bool = True) -> "POVM":
        povm = cls(np.array([as_matrix(m) for m in mats]), labels)
        if validate:
            povm.validate()
        return povm

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def label_of(self, i: int):
        return i if self.labels is None else self.labels[i]

    def index(self, label) -> int:
        if self.labels is None:
            return int(label)
        return self.labels.index(label)

    def violations(self) -> list[str]:
        out = []
        for i, e in enumerate(self.elements):
            for v in effect_violations(e):
                out.append(f"element {self.label_of(i)!r}: {v}")
        dev = np.max(np.abs(self.elements.sum(axis=0) - np.eye(self.dim)))
        if dev > get_tolerances().povm_sum:
            out.append(f"completeness (max deviation from identity={dev:.3g})")
        return out

    def validate(self) -> "POVM":
        bad = self.violations()
        if bad:
            raise InvalidStateError("invalid POVM: " + "; ".join(bad), bad)
        return self

    def probabilities(self, rho) -> np.ndarray:
        rho = as_matrix(rho)
        if rho.shape != (self.dim, self.dim):
            raise DimensionError(f"state dim {rho.shape[0]} does not match POVM dim {self.dim}")
        return np.real(np.einsum("nij,ji->n", self.elements, rho))


def computational_povm(d: int) -> POVM:
    return POVM(np.array([basis_projector(d, i) for i in range(d)]), tuple(range(d)))


# -- JSON encoding -------------------------------------------------------------


def matrix_to_json(m) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    m = as_matrix(m)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2 and arr.shape[1] == 2:
        n = int(round(np.sqrt(arr.shape[0])))
        if n * n != arr.shape[0]:
            raise ValueError("flat matrix encoding must hold a square number of entries")
        return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)
    raise ValueError(f"unrecognised matrix encoding with shape {arr.shape}")
