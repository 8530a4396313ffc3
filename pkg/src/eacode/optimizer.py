"""Seesaw improvement of measurement strategies for a fixed state.

With one party's measurements held fixed, the success probability is
linear in the other party's measurement elements:

    success = sum_settings Tr[E0 R0 + E1 R1] + const

For a two-outcome measurement ``E1 = I - E0`` this is maximized by the
projector onto the positive eigenspace of ``R0 - R1``.  Alternating the two
sides never decreases the objective.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from eacode import qmath
from eacode.channel import FiniteChannel, make_rng
from eacode.errors import DomainError, SeesawError
from eacode.protocol import (
    MeasurementBasis,
    MeasurementStrategy,
    butterfly_layout,
    chsh_strategy,
    decode,
    exact_success,
    random_strategy,
)
from eacode.states import as_density_matrix

MONOTONE_TOL = 1e-10
DEGENERATE_TOL = 1e-10

Side = Literal["alice", "bob"]


@dataclass(frozen=True)
class SeesawConfig:
    """``init`` is a strategy, ``"chsh"`` or ``"random(<seed>)"``."""

    max_iters: int = 50
    tol: float = 1e-10
    init: object = "random(0)"

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if not self.tol > 0:
            raise DomainError("tol must be positive")

    def initial_strategy(self) -> MeasurementStrategy:
        if isinstance(self.init, MeasurementStrategy):
            return self.init
        if self.init == "chsh":
            return chsh_strategy()
        if isinstance(self.init, str) and self.init.startswith("random(") and self.init.endswith(")"):
            seed = int(self.init[len("random("):-1])
            return random_strategy(make_rng(seed))
        raise DomainError(f"cannot interpret seesaw init {self.init!r}")


@dataclass
class SeesawResult:
    strategy: MeasurementStrategy
    trace: list = field(default_factory=list)
    iterations: int = 0

    @property
    def final_objective(self) -> float:
        return self.trace[-1]

    def to_json_obj(self) -> dict:
        s = self.strategy.to_json_obj()
        obj = {
            "final_objective": self.final_objective,
            "iterations": self.iterations,
            "angles": {"alice": s["alice_angles"], "bob": s["bob_angles"]},
            "trace": list(self.trace),
        }
        for key in ("alice_projectors", "bob_projectors"):
            if key in s:
                obj[key] = s[key]
        return obj


def _reduce_to_alice(m4: np.ndarray, b_op: np.ndarray) -> np.ndarray:
    """``Tr_B[(I (x) B) rho]``."""
    return np.einsum("lk,ikjl->ij", b_op, m4)


def _reduce_to_bob(m4: np.ndarray, a_op: np.ndarray) -> np.ndarray:
    """``Tr_A[(A (x) I) rho]``."""
    return np.einsum("ji,ikjl->kl", a_op, m4)


def score_operators(rho, strat: MeasurementStrategy, ch: FiniteChannel, side: Side):
    """Linearize the success probability in one side's measurements.

    Returns
    -------
    pairs : list of (R0, R1)
        One pair per measurement setting of ``side`` (index = q for Alice,
        v for Bob).
    const : float
        Part of the objective that does not involve ``side``.
    """
    if side not in ("alice", "bob"):
        raise DomainError("side must be 'alice' or 'bob'")
    layout = butterfly_layout(ch)
    m4 = as_density_matrix(rho).matrix.reshape(2, 2, 2, 2)
    r = np.zeros((2, 2, 2, 2), dtype=complex)  # [setting, outcome] -> 2x2
    const = 0.0
    for q, alpha in np.ndindex(2, 2):
        x = layout.input_index[(q, alpha)]
        a_op = strat.alice[q][alpha]
        for j, y in enumerate(layout.outputs):
            w = 0.5 * ch.probs[x, j]
            if w == 0:
                continue
            if y.t == "1":
                if decode(y) != q:
                    continue
                if side == "alice":
                    r[q, alpha] += w * _reduce_to_alice(m4, qmath.I2)
                else:
                    const += w * float(np.real(np.trace(_reduce_to_bob(m4, a_op))))
                continue
            v = strat.bob_setting(y.t)
            for beta in (0, 1):
                if decode(y, beta) != q:
                    continue
                if side == "alice":
                    r[q, alpha] += w * _reduce_to_alice(m4, strat.bob[v][beta])
                else:
                    r[v, beta] += w * _reduce_to_bob(m4, a_op)
    pairs = [(0.5 * (r[s, 0] + r[s, 0].conj().T), 0.5 * (r[s, 1] + r[s, 1].conj().T))
             for s in (0, 1)]
    return pairs, const


def linearized_objective(pairs, const, bases) -> float:
    return const + sum(float(np.real(np.trace(basis[0] @ r0 + basis[1] @ r1)))
                       for (r0, r1), basis in zip(pairs, bases))


def _improve(pairs, current):
    """Best two-outcome projective measurement per setting."""
    new = []
    for (r0, r1), basis in zip(pairs, current):
        d = r0 - r1
        if np.max(np.abs(d)) <= DEGENERATE_TOL:
            new.append(basis)
        else:
            new.append(MeasurementBasis.from_projector(qmath.positive_part_projector(d)))
    return tuple(new)


def seesaw(rho, ch: FiniteChannel, cfg: SeesawConfig | None = None) -> SeesawResult:
    """Alternate Alice and Bob updates until a sweep gains less than ``cfg.tol``.

    The returned trace starts with the initial objective and then holds
    the objective after every half-step.
    """
    cfg = cfg or SeesawConfig()
    rho = as_density_matrix(rho)
    butterfly_layout(ch)
    strat = cfg.initial_strategy()
    trace = [exact_success(rho, strat, ch)]
    sweeps = 0
    for sweeps in range(1, cfg.max_iters + 1):
        start = trace[-1]
        for side in ("alice", "bob"):
            pairs, _ = score_operators(rho, strat, ch, side)
            if side == "alice":
                strat = MeasurementStrategy(_improve(pairs, strat.alice), strat.bob,
                                            strat.bob_choice)
            else:
                strat = MeasurementStrategy(strat.alice, _improve(pairs, strat.bob),
                                            strat.bob_choice)
            value = exact_success(rho, strat, ch)
            if value < trace[-1] - MONOTONE_TOL:
                raise SeesawError(
                    f"objective decreased on the {side} step of sweep {sweeps}",
                    diagnostics={"before": trace[-1], "after": value, "side": side,
                                 "sweep": sweeps, "trace": list(trace)})
            trace.append(value)
        if trace[-1] - start < cfg.tol:
            break
    return SeesawResult(strat, trace, sweeps)


def _seeded_run(args):
    rho, ch, seed, max_iters, tol = args
    return seesaw(rho, ch, SeesawConfig(max_iters, tol, f"random({seed})"))


def multistart(rho, ch: FiniteChannel, seeds, max_iters: int = 50, tol: float = 1e-10,
               workers: int = 1) -> list[SeesawResult]:
    """Independent seesaw runs from ``random(seed)`` for each seed."""
    rho = as_density_matrix(rho)
    jobs = [(rho, ch, int(s), max_iters, tol) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_seeded_run, jobs))
    return [_seeded_run(job) for job in jobs]


def save_result(result: SeesawResult, path) -> None:
    Path(path).write_text(json.dumps(result.to_json_obj(), indent=2) + "\n")
