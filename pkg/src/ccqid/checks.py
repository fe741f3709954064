"""Seeded invariant suites with replayable counterexample dumps.

Each suite draws its instances from child generators of one seed, so a
run is reproducible from ``(suite, seed, count, channel)``.  A failing
instance is dumped as plain JSON data that :func:`replay` evaluates again.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import CCQChannel, CQChannel, extend_memoryless, fix_sender, induce_classical
from .dist import Distribution
from .info import classical_mi, coarse_grain_distance_check, holevo
from .io import channel_from_json, channel_to_json
from .linalg import POVM, matrix_from_json, matrix_to_json
from .randomness import random_channel, random_povm, random_state, random_weights, spawn
from .regions import mi_inequalities, subadditivity_check
from .transforms import binary_kl, chernoff_tail_bound

SUITES = ("d1", "chainrules", "subadd", "chernoff")
MI_TOL = 1e-8
D1_TOL = 1e-9

# (lambda, mu, m) triples for the tail-bound suite
CHERNOFF_GRID = [(0.5, 0.25, 20), (0.5, 0.25, 10), (0.4, 0.25, 30), (0.3, 0.1, 40),
                 (0.6, 0.5, 50), (0.75, 0.5, 16), (0.2, 0.05, 60)]


@dataclass
class SuiteResult:
    name: str
    instances: int
    failures: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "instances": self.instances,
                "stats": self.stats, "failures": self.failures}


def _povm_json(e: POVM) -> list:
    return [matrix_to_json(m) for m in e.elements]


def _povm_from(data) -> POVM:
    return POVM(np.array([matrix_from_json(m) for m in data]), tuple(range(len(data))))


# -- d1: coarse-graining cannot increase the measured distance ---------------------


def _d1_instance(rng) -> dict:
    d = int(rng.integers(2, 5))
    n = int(rng.integers(2, 6))
    e = random_povm(rng, d, n)
    mask = rng.random(n) < 0.5
    part = [[int(i) for i in range(n) if mask[i]], [int(i) for i in range(n) if not mask[i]]]
    return {"suite": "d1", "rho": matrix_to_json(random_state(rng, d)),
            "sigma": matrix_to_json(random_state(rng, d)), "povm": _povm_json(e), "partition": part}


def _d1_eval(inst: dict) -> tuple[bool, dict]:
    lhs, rhs, _ = coarse_grain_distance_check(matrix_from_json(inst["rho"]), matrix_from_json(inst["sigma"]),
                                              _povm_from(inst["povm"]), inst["partition"])
    return rhs <= lhs + D1_TOL, {"refined": lhs, "coarse": rhs, "tolerance": D1_TOL}


def suite_d1(seed: int, count: int = 100) -> SuiteResult:
    res = SuiteResult("d1", count)
    gap = np.inf
    for rng in spawn(seed, count):
        inst = _d1_instance(rng)
        ok, vals = _d1_eval(inst)
        gap = min(gap, vals["refined"] - vals["coarse"])
        if not ok:
            res.failures.append({**inst, "values": vals})
    res.stats = {"min_refined_minus_coarse": float(gap), "tolerance": D1_TOL}
    return res


# -- chain rules and the Holevo bound -------------------------------------------------


def _chain_instance(rng, channel: CCQChannel | None) -> dict:
    w = channel if channel is not None else random_channel(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)),
                                                           int(rng.integers(2, 4)))
    p1 = random_weights(rng, len(w.x_alphabet), sparsity=0.2)
    p2 = random_weights(rng, len(w.y_alphabet), sparsity=0.2)
    return {"suite": "chainrules", "kind": "mi", "channel": channel_to_json(w),
            "p1": p1.tolist(), "p2": p2.tolist()}


def _chain_eval(inst: dict) -> tuple[bool, dict]:
    w = channel_from_json(inst["channel"])
    slack = mi_inequalities(w, np.array(inst["p1"]), np.array(inst["p2"]))
    return min(slack.values()) >= -MI_TOL, {**slack, "tolerance": MI_TOL}


def _holevo_instance(rng, channel: CCQChannel | None) -> dict:
    if channel is not None:
        q = random_weights(rng, len(channel.y_alphabet))
        cq = fix_sender(channel, Distribution.from_dense(q, list(channel.inputs_y)), side="y")
        states = [cq.output(x) for x in cq.inputs]
        d = channel.dim
    else:
        d = int(rng.integers(2, 4))
        states = [random_state(rng, d) for _ in range(int(rng.integers(2, 5)))]
    p = random_weights(rng, len(states), sparsity=0.2)
    e = random_povm(rng, d, int(rng.integers(2, 5)))
    return {"suite": "chainrules", "kind": "holevo", "states": [matrix_to_json(s) for s in states],
            "p": p.tolist(), "povm": _povm_json(e)}


def _holevo_eval(inst: dict) -> tuple[bool, dict]:
    states = [matrix_from_json(s) for s in inst["states"]]
    w = CQChannel.from_outputs(range(len(states)), states)
    p = Distribution.from_dense(inst["p"])
    e = _povm_from(inst["povm"])
    measured = classical_mi(induce_classical(w, e).joint(p))
    chi = holevo(p, w)
    return measured <= chi + MI_TOL, {"measured_mi": measured, "holevo": chi, "tolerance": MI_TOL}


def suite_chainrules(seed: int, count: int = 100, channel: CCQChannel | None = None,
                     holevo_count: int | None = None) -> SuiteResult:
    holevo_count = count // 2 if holevo_count is None else holevo_count
    res = SuiteResult("chainrules", count + holevo_count)
    rngs = spawn(seed, count + holevo_count)
    worst = np.inf
    for rng in rngs[:count]:
        inst = _chain_instance(rng, channel)
        ok, vals = _chain_eval(inst)
        worst = min(worst, min(vals["a_given_b"], vals["b_given_a"], vals["sum"]))
        if not ok:
            res.failures.append({**inst, "values": vals})
    worst_h = np.inf
    for rng in rngs[count:]:
        inst = _holevo_instance(rng, channel)
        ok, vals = _holevo_eval(inst)
        worst_h = min(worst_h, vals["holevo"] - vals["measured_mi"])
        if not ok:
            res.failures.append({**inst, "values": vals})
    res.stats = {"mi_instances": count, "holevo_instances": holevo_count, "min_mi_slack": float(worst),
                 "min_holevo_slack": float(worst_h), "tolerance": MI_TOL}
    return res


# -- subadditivity over two uses ------------------------------------------------------------


def _subadd_instance(rng, channel: CCQChannel | None, product: bool) -> dict:
    w = channel if channel is not None else random_channel(rng, 2, 2, 2)
    nx, ny = len(w.x_alphabet), len(w.y_alphabet)
    if product:
        a = random_weights(rng, nx)
        p1 = np.outer(a, random_weights(rng, nx))
    else:
        j = random_weights(rng, nx * nx).reshape(nx, nx)
        p1 = (j + j.T) / 2  # exchangeable, so both uses share one marginal
    q = random_weights(rng, ny)
    p2 = np.outer(q, q)
    return {"suite": "subadd", "product": product, "channel": channel_to_json(w),
            "p1": p1.ravel().tolist(), "p2": p2.ravel().tolist()}


def _subadd_eval(inst: dict) -> tuple[bool, dict]:
    w = channel_from_json(inst["channel"])
    w2 = extend_memoryless(w, 2)
    p1 = Distribution.from_dense(inst["p1"], list(w2.inputs_x))
    p2 = Distribution.from_dense(inst["p2"], list(w2.inputs_y))
    rep = subadditivity_check(w, p1, p2, tol=MI_TOL)
    vals = {"lhs": rep.lhs, "rhs": rep.rhs, "rhs_first_doubled": rep.rhs_first_doubled,
            "joint_lhs": rep.joint_lhs, "joint_rhs": rep.joint_rhs, "tolerance": MI_TOL}
    if inst["product"]:
        ok = rep.ok and abs(rep.lhs - rep.rhs) <= MI_TOL
    else:
        # exchangeable inputs: both uses carry the same single-use term
        ok = rep.ok and rep.lhs <= rep.rhs_first_doubled + MI_TOL
    return ok, vals


def suite_subadd(seed: int, count: int = 50, channel: CCQChannel | None = None) -> SuiteResult:
    res = SuiteResult("subadd", 2 * count)
    worst, eq = np.inf, 0.0
    for i, rng in enumerate(spawn(seed, 2 * count)):
        inst = _subadd_instance(rng, channel, product=i >= count)
        ok, vals = _subadd_eval(inst)
        if inst["product"]:
            eq = max(eq, abs(vals["lhs"] - vals["rhs"]))
        else:
            worst = min(worst, vals["rhs_first_doubled"] - vals["lhs"])
        if not ok:
            res.failures.append({**inst, "values": vals})
    res.stats = {"min_slack_correlated": float(worst), "max_gap_product": float(eq), "tolerance": MI_TOL}
    return res


# -- Chernoff-Hoeffding tail ----------------------------------------------------------------


def _chernoff_eval(inst: dict) -> tuple[bool, dict]:
    lam, mu, m = inst["lambda"], inst["mu"], inst["m"]
    rng = np.random.Generator(np.random.PCG64(inst["seed"]))
    bound = chernoff_tail_bound(lam, mu, m)
    sums = (rng.random((inst["trials"], m)) < mu).sum(axis=1)
    tail = float(np.mean(sums > lam * m))
    return tail <= bound, {"empirical": tail, "bound": bound, "kl": binary_kl(lam, mu)}


def suite_chernoff(seed: int, trials: int = 100_000, batches: int = 1, grid=None) -> SuiteResult:
    grid = CHERNOFF_GRID if grid is None else grid
    res = SuiteResult("chernoff", len(grid) * batches)
    seeds = np.random.SeedSequence(seed).generate_state(len(grid) * batches, dtype=np.uint64)
    rows = []
    for g, (lam, mu, m) in enumerate(grid):
        for b in range(batches):
            inst = {"suite": "chernoff", "lambda": lam, "mu": mu, "m": m, "trials": trials,
                    "seed": int(seeds[g * batches + b])}
            ok, vals = _chernoff_eval(inst)
            rows.append({"lambda": lam, "mu": mu, "m": m, "batch": b, **vals})
            if not ok:
                res.failures.append({**inst, "values": vals})
    res.stats = {"batches": rows, "fraction_within_bound": 1.0 - len(res.failures) / max(len(rows), 1)}
    return res


# -- dispatch ----------------------------------------------------------------------------


def run_suite(name: str, seed: int, count: int | None = None, channel: CCQChannel | None = None) -> list[SuiteResult]:
    if name == "all":
        return [r for s in SUITES for r in run_suite(s, seed, count, channel)]
    if name == "d1":
        return [suite_d1(seed, 100 if count is None else count)]
    if name == "chainrules":
        return [suite_chainrules(seed, 100 if count is None else count, channel)]
    if name == "subadd":
        return [suite_subadd(seed, 50 if count is None else count, channel)]
    if name == "chernoff":
        return [suite_chernoff(seed)]
    raise ValueError(f"unknown suite {name!r}")


_EVAL = {"d1": _d1_eval, "subadd": _subadd_eval, "chernoff": _chernoff_eval}


def replay(dump: dict) -> tuple[bool, dict]:
    """Evaluate a dumped instance again; returns ``(passed, values)``."""
    suite = dump["suite"]
    if suite == "chainrules":
        return (_holevo_eval if dump.get("kind") == "holevo" else _chain_eval)(dump)
    return _EVAL[suite](dump)
