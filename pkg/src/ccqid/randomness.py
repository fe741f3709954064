"""Seeded random instances: states, POVMs, channels, codes.

All sampling goes through ``numpy.random.Generator`` backed by PCG64;
``spawn`` derives independent child generators from one seed.
"""

from __future__ import annotations

import numpy as np

from .channels import CCQChannel
from .coding import TransmissionCode
from .dist import Distribution
from .linalg import POVM, hermitian_eig


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def spawn(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from ``seed`` (stable across runs)."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def _ginibre(rng, rows, cols) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_state(rng, d: int, rank: int | None = None) -> np.ndarray:
    """Density matrix ``G G† / tr(G G†)`` with ``G`` a complex Gaussian ``d x rank`` matrix."""
    g = _ginibre(rng, d, d if rank is None else rank)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(rng, d: int) -> np.ndarray:
    return random_state(rng, d, rank=1)


def _inv_sqrt(s: np.ndarray) -> np.ndarray:
    vals, vecs = hermitian_eig(s, vectors=True)
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T


def random_povm(rng, d: int, n: int) -> POVM:
    """``E_i = S^{-1/2} G_i S^{-1/2}`` with random positive ``G_i`` and ``S = Σ G_i``."""
    gs = []
    for _ in range(n):
        g = _ginibre(rng, d, d)
        gs.append(g @ g.conj().T)
    t = _inv_sqrt(sum(gs))
    els = np.array([t @ g @ t for g in gs])
    els = (els + els.conj().transpose(0, 2, 1)) / 2
    return POVM(els, tuple(range(n)))


def random_unitary(rng, d: int) -> np.ndarray:
    """``exp(iH)`` for a random Hermitian ``H``."""
    g = _ginibre(rng, d, d)
    h = (g + g.conj().T) / 2
    vals, vecs = hermitian_eig(h, vectors=True)
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def random_weights(rng, n: int, sparsity: float = 0.0) -> np.ndarray:
    """Dirichlet(1) weights; with ``sparsity`` > 0 some entries are zeroed (at least one survives)."""
    w = rng.dirichlet(np.ones(n))
    if sparsity > 0:
        mask = rng.random(n) >= sparsity
        if not mask.any():
            mask[rng.integers(n)] = True
        w = np.where(mask, w, 0.0)
        w = w / w.sum()
    return w


def random_distribution(rng, labels, sparsity: float = 0.0) -> Distribution:
    labels = list(labels)
    return Distribution.from_dense(random_weights(rng, len(labels), sparsity), labels)


def random_channel(rng, nx: int = 2, ny: int = 2, d: int = 2, rank: int | None = None) -> CCQChannel:
    outs = np.array([[random_state(rng, d, rank) for _ in range(ny)] for _ in range(nx)])
    return CCQChannel([str(i) for i in range(nx)], [str(i) for i in range(ny)], outs)


def noiseless_binary_channel() -> CCQChannel:
    """``W(x, y) = |xy><xy|`` on a four-dimensional output."""
    outs = np.zeros((2, 2, 4, 4), dtype=complex)
    for x in range(2):
        for y in range(2):
            outs[x, y, 2 * x + y, 2 * x + y] = 1.0
    return CCQChannel(["0", "1"], ["0", "1"], outs)


def constant_channel(nx: int = 2, ny: int = 2, rho=None) -> CCQChannel:
    rho = np.diag([1.0, 0.0]).astype(complex) if rho is None else np.asarray(rho, dtype=complex)
    outs = np.broadcast_to(rho, (nx, ny) + rho.shape).copy()
    return CCQChannel([str(i) for i in range(nx)], [str(i) for i in range(ny)], outs)


def random_code(rng, wk: CCQChannel, M: int, N: int, failure: bool = False) -> TransmissionCode:
    """Random codewords and a random decoder POVM (plus a failure outcome when asked)."""
    xs = [wk.inputs_x[int(i)] for i in rng.integers(0, len(wk.inputs_x), size=M)]
    ys = [wk.inputs_y[int(i)] for i in rng.integers(0, len(wk.inputs_y), size=N)]
    povm = random_povm(rng, wk.dim, M * N + (1 if failure else 0))
    dec = povm.elements[:M * N].reshape(M, N, wk.dim, wk.dim)
    return TransmissionCode(wk.k, xs, ys, dec, povm.elements[M * N] if failure else None)


def perfect_binary_code() -> TransmissionCode:
    """The 2x2 code sending each bit directly over the noiseless binary channel."""
    dec = np.zeros((2, 2, 4, 4), dtype=complex)
    for m in range(2):
        for n in range(2):
            dec[m, n, 2 * m + n, 2 * m + n] = 1.0
    return TransmissionCode(1, [0, 1], [0, 1], dec)
