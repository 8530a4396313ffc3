"""Trial-by-trial simulation of the coding protocol.

Each trial draws a message ``q``, samples Alice's outcome ``alpha`` from
her Born marginal, passes ``(q, alpha)`` through the channel and lets Bob
measure the state left on his side (conditioned on ``alpha``) before
decoding.  Two backends are available:

``physical``
    Bob's photon goes through the X and Z Pockels cells set from ``(t, b)``
    and then through the fixed ``pi/8`` analyzer, whose port directly gives
    the decoded bit.
``direct``
    ``beta`` is sampled from the conditional Born distribution in basis
    ``v`` and decoded with ``b xor beta``.

Trials are split into fixed-size shards with one child ``SeedSequence``
each, so results do not depend on how many workers run the shards.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from eacode import qmath
from eacode.channel import FiniteChannel, make_rng
from eacode.errors import DomainError, NotApplicableError
from eacode.protocol import (
    T1_BASIS,
    MeasurementBasis,
    MeasurementStrategy,
    NonSignalingBox,
    butterfly_layout,
    joint_probabilities,
)
from eacode.states import DensityMatrix, as_density_matrix

SHARD_SIZE = 1 << 16
BACKENDS = ("direct", "physical")

# Fixed analyzer after the Pockels cells: transmitted port = |pi/8>.
ANALYZER = MeasurementBasis.from_angle(math.pi / 8)


class PockelsSettings(NamedTuple):
    x_on: int
    z_on: int


def pockels_settings(t: str, b: int) -> PockelsSettings:
    """Pockels cell states for channel output ``(t, b)`` (1 = ON)."""
    if b not in (0, 1):
        raise DomainError("b must be a bit")
    if t == "2":
        return PockelsSettings(1 ^ b, b)
    if t == "P":
        return PockelsSettings(b, b)
    if t == "1":
        raise NotApplicableError("Pockels cells are not used when t = 1")
    raise DomainError(f"unknown trit {t!r}")


def pockels_operator(settings: PockelsSettings) -> np.ndarray:
    """``X^x_on Z^z_on`` acting on Bob's photon (Z first, then X)."""
    op = qmath.I2
    if settings.z_on:
        op = qmath.SIGMA_Z @ op
    if settings.x_on:
        op = qmath.SIGMA_X @ op
    return op


def effective_measurement(t: str, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Analyzer elements pulled back through the Pockels cells.

    Element ``k`` is ``U^dagger Pi_k U``: the operator on Bob's photon whose
    expectation gives the probability that the analyzer reports ``k``.
    """
    u = pockels_operator(pockels_settings(t, b))
    return tuple(u.conj().T @ ANALYZER[k] @ u for k in (0, 1))


def pockels_identity_error(strat: MeasurementStrategy, t: str, b: int) -> float:
    """Max entrywise deviation of the hardware identity for ``(t, b)``.

    Analyzer outcome ``k`` must coincide with outcome ``k xor b`` of Bob's
    basis ``v(t)``, so that the analyzer port is the decoded bit ``b xor beta``.
    """
    eff = effective_measurement(t, b)
    basis = strat.bob[strat.bob_setting(t)]
    return max(float(np.max(np.abs(eff[k] - basis[k ^ b]))) for k in (0, 1))


# -- records and counts ------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    q: int
    alpha: int
    t: str
    b: int
    v: int | None
    beta: int | None
    q_hat: int

    @property
    def success(self) -> bool:
        return self.q == self.q_hat


@dataclass(frozen=True)
class CountsTable:
    """``counts[q][q_hat]`` over all trials."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64).reshape(2, 2)
        if c.min() < 0:
            raise DomainError("counts must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def successes(self) -> int:
        return int(self.counts[0, 0] + self.counts[1, 1])

    def __add__(self, other: "CountsTable") -> "CountsTable":
        return CountsTable(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, CountsTable) and np.array_equal(self.counts, other.counts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["q", "q_hat", "count"])
        for q in (0, 1):
            for qh in (0, 1):
                w.writerow([q, qh, int(self.counts[q, qh])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountsTable":
        c = np.zeros((2, 2), dtype=np.int64)
        for row in csv.DictReader(io.StringIO(text)):
            c[int(row["q"]), int(row["q_hat"])] += int(row["count"])
        return cls(c)


def estimate_success(counts: CountsTable) -> tuple[float, float]:
    """Success ratio and its binomial standard error."""
    n = counts.total
    if n == 0:
        raise DomainError("cannot estimate success from zero trials")
    p = counts.successes / n
    return p, math.sqrt(p * (1 - p) / n)


# -- simulation tables ---------------------------------------------------------------

@dataclass(frozen=True)
class _Tables:
    """Per-configuration probabilities shared by all trials of a run.

    ``p_alpha1[q]``: Pr[alpha = 1 | q].
    ``p_zero[q, alpha, y]``: probability that Bob's recorded bit is 0, where
    the bit is ``beta`` (direct) or the analyzer port (physical).
    """

    p_alpha1: np.ndarray
    p_zero: np.ndarray
    input_index: np.ndarray  # [q, alpha] -> channel input
    out_t: np.ndarray  # trit code per output: 0 -> '1', 1 -> '2', 2 -> 'P'
    out_b: np.ndarray
    out_v: np.ndarray
    cdf: np.ndarray
    physical: bool


_TRIT_CODE = {"1": 0, "2": 1, "P": 2}
_TRITS = ("1", "2", "P")


def _conditional_bob_states(rho: DensityMatrix, strat: MeasurementStrategy):
    """Bob's post-measurement state and Alice's outcome probability per (q, alpha)."""
    m = rho.matrix.reshape(2, 2, 2, 2)
    states, probs = {}, np.zeros((2, 2))
    for q, al in np.ndindex(2, 2):
        a = strat.alice[q][al]
        # Tr_A[(A (x) I) rho]
        unnorm = np.einsum("ji,ikjl->kl", a, m)
        p = float(np.real(np.trace(unnorm)))
        probs[q, al] = p
        states[q, al] = unnorm / p if p > 0 else qmath.I2 / 2
    return states, probs


def _build_tables(source, strat: MeasurementStrategy, ch: FiniteChannel,
                  backend: str) -> _Tables:
    if backend not in BACKENDS:
        raise DomainError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    layout = butterfly_layout(ch)
    outputs = layout.outputs
    out_t = np.array([_TRIT_CODE[y.t] for y in outputs])
    out_b = np.array([y.b for y in outputs])
    out_v = np.array([-1 if y.t == "1" else strat.bob_setting(y.t) for y in outputs])
    input_index = np.array([[layout.input_index[(q, al)] for al in (0, 1)] for q in (0, 1)])
    cdf = np.cumsum(ch.probs, axis=1)
    cdf[:, -1] = 1.0

    p_zero = np.zeros((2, 2, len(outputs)))
    if isinstance(source, NonSignalingBox):
        if backend == "physical":
            raise DomainError("the physical backend needs a quantum state, not a box")
        joint = source.table
    else:
        rho = as_density_matrix(source)
        joint = joint_probabilities(rho, strat)
    # Pr[alpha | q] does not depend on v for non-signaling sources.
    p_alpha = joint[:, T1_BASIS].sum(axis=2)
    p_alpha1 = p_alpha[:, 1]

    if backend == "direct":
        for q, al in np.ndindex(2, 2):
            for j, y in enumerate(outputs):
                if y.t == "1":
                    continue
                v = out_v[j]
                pa = joint[q, v, al].sum()
                p_zero[q, al, j] = joint[q, v, al, 0] / pa if pa > 0 else 0.5
    else:
        for t in ("2", "P"):
            for b in (0, 1):
                if pockels_identity_error(strat, t, b) > 1e-9:
                    raise DomainError(
                        "the physical backend only realizes Bob bases reachable by the "
                        "Pockels cells and the pi/8 analyzer")
        bob_states, _ = _conditional_bob_states(rho, strat)
        for q, al in np.ndindex(2, 2):
            for j, y in enumerate(outputs):
                if y.t == "1":
                    continue
                u = pockels_operator(pockels_settings(y.t, y.b))
                rotated = u @ bob_states[q, al] @ u.conj().T
                p_zero[q, al, j] = float(np.real(np.trace(ANALYZER[0] @ rotated)))
    return _Tables(p_alpha1, np.clip(p_zero, 0, 1), input_index, out_t, out_b, out_v,
                   cdf, backend == "physical")


def _simulate_shard(tables: _Tables, n: int, seed_seq) -> dict:
    rng = make_rng(seed_seq)
    u = rng.random((4, n))
    q = (u[0] < 0.5).astype(np.int64)
    alpha = (u[1] < tables.p_alpha1[q]).astype(np.int64)
    x = tables.input_index[q, alpha]
    y = (u[2][:, None] >= tables.cdf[x]).sum(axis=1)
    y = np.minimum(y, tables.cdf.shape[1] - 1)
    t = tables.out_t[y]
    b = tables.out_b[y]
    bit = (u[3] >= tables.p_zero[q, alpha, y]).astype(np.int64)
    measured = t != 0
    if tables.physical:
        q_hat = np.where(measured, bit, b)
        beta = np.where(measured, bit ^ b, -1)
    else:
        beta = np.where(measured, bit, -1)
        q_hat = np.where(measured, b ^ bit, b)
    v = np.where(measured, tables.out_v[y], -1)
    return {"q": q, "alpha": alpha, "y": y, "t": t, "b": b, "v": v, "beta": beta,
            "q_hat": q_hat}


def _shard_counts(args) -> np.ndarray:
    tables, n, seed_seq = args
    arr = _simulate_shard(tables, n, seed_seq)
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (arr["q"], arr["q_hat"]), 1)
    return counts


def _shards(n: int, seed: int):
    n_shards = max(1, math.ceil(n / SHARD_SIZE))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(n_shards)
    sizes = [SHARD_SIZE] * (n_shards - 1) + [n - SHARD_SIZE * (n_shards - 1)]
    return list(zip(sizes, children))


def run_trials(source, strat: MeasurementStrategy, ch: FiniteChannel, n: int,
               seed: int, backend: str = "direct", workers: int = 1) -> CountsTable:
    """Simulate ``n`` protocol rounds and tally ``counts[q][q_hat]``.

    ``source`` is a density matrix (or anything accepted as one) or a
    ``NonSignalingBox``.  The same ``seed`` always yields the same table,
    whatever the number of ``workers``.
    """
    if int(n) < 1:
        raise DomainError("number of trials must be at least 1")
    tables = _build_tables(source, strat, ch, backend)
    jobs = [(tables, size, child) for size, child in _shards(int(n), seed)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_shard_counts, jobs))
    else:
        parts = [_shard_counts(job) for job in jobs]
    return CountsTable(np.sum(parts, axis=0))


def simulate_records(source, strat: MeasurementStrategy, ch: FiniteChannel, n: int,
                     seed: int, backend: str = "direct") -> list[TrialRecord]:
    """Per-trial records; draws the same trials as ``run_trials`` with equal seed."""
    tables = _build_tables(source, strat, ch, backend)
    records = []
    for size, child in _shards(int(n), seed):
        arr = _simulate_shard(tables, size, child)
        for i in range(size):
            measured = arr["t"][i] != 0
            records.append(TrialRecord(
                q=int(arr["q"][i]), alpha=int(arr["alpha"][i]), t=_TRITS[arr["t"][i]],
                b=int(arr["b"][i]),
                v=int(arr["v"][i]) if measured else None,
                beta=int(arr["beta"][i]) if measured else None,
                q_hat=int(arr["q_hat"][i])))
    return records


def relation_frequencies(source, strat: MeasurementStrategy, ch: FiniteChannel, n: int,
                         seed: int, backend: str = "direct"):
    """Empirical Pr[alpha xor beta = q v] per (q, v) with trial counts."""
    tables = _build_tables(source, strat, ch, backend)
    hits = np.zeros((2, 2))
    trials = np.zeros((2, 2))
    for size, child in _shards(int(n), seed):
        arr = _simulate_shard(tables, size, child)
        measured = arr["t"] != 0
        q, v = arr["q"][measured], arr["v"][measured]
        ok = (arr["alpha"][measured] ^ arr["beta"][measured]) == q * v
        np.add.at(trials, (q, v), 1)
        np.add.at(hits, (q, v), ok)
    return hits / np.maximum(trials, 1), trials


def strategy_hash(strat: MeasurementStrategy) -> str:
    payload = json.dumps(strat.to_json_obj(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def run_metadata(seed: int, n: int, backend: str, strat: MeasurementStrategy) -> dict:
    return {"seed": int(seed), "n": int(n), "backend": backend,
            "strategy_hash": strategy_hash(strat), "shard_size": SHARD_SIZE}
