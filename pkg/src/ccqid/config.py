"""Global numerical tolerances and size caps.

A single :class:`Tolerances` record is active at any time.  It can be
replaced with :func:`set_tolerances` (or temporarily with the
:func:`override` context manager) and is initialised from ``CCQID_*``
environment variables on import.
"""

from __future__ import annotations

import contextlib
import dataclasses
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-9
    psd: float = 1e-10
    trace: float = 1e-9
    povm_sum: float = 1e-9
    upper: float = 1e-9
    distribution: float = 1e-9
    eig_offdiag: float = 1e-12
    mi_clamp: float = 1e-8
    simultaneous: float = 1e-8
    dim_cap: int = 4096
    grid_budget: int = 1_000_000
    max_attempts: int = 64
    eig_backend: str = "jacobi"

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_ENV_PREFIX = "CCQID_"


def coerce(name: str, raw: str):
    """Parse a textual override for the field ``name`` to the field's type."""
    fields = {f.name: f for f in dataclasses.fields(Tolerances)}
    if name not in fields:
        raise ValueError(f"unknown tolerance {name!r}")
    default = getattr(Tolerances(), name)
    if isinstance(default, int):
        return int(float(raw))
    if isinstance(default, float):
        return float(raw)
    return str(raw)


def _from_env(base: Tolerances) -> Tolerances:
    updates = {}
    for field in dataclasses.fields(base):
        raw = os.environ.get(_ENV_PREFIX + field.name.upper())
        if raw is not None:
            updates[field.name] = coerce(field.name, raw)
    return dataclasses.replace(base, **updates)


_active = _from_env(Tolerances())


def get_tolerances() -> Tolerances:
    return _active


def set_tolerances(tol: Tolerances | None = None, **changes) -> Tolerances:
    """Install a new tolerance record and return the previous one."""
    global _active
    previous = _active
    base = tol if tol is not None else _active
    _active = dataclasses.replace(base, **changes)
    if _active.dim_cap <= 0 or _active.grid_budget <= 0 or _active.max_attempts <= 0:
        _active = previous
        raise ValueError("caps must be positive")
    if _active.eig_backend not in ("jacobi", "numpy"):
        backend, _active = _active.eig_backend, previous
        raise ValueError(f"unknown eig backend {backend!r}")
    return previous


@contextlib.contextmanager
def override(**changes):
    previous = set_tolerances(**changes)
    try:
        yield get_tolerances()
    finally:
        set_tolerances(previous)
