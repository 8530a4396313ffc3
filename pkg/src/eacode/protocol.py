"""Entanglement-assisted transmission of one bit over the butterfly channel.

Alice measures her qubit in basis ``q`` (the message) and feeds
``(q, alpha)`` into the channel.  Bob reads ``(t, b)``; for ``t = 2`` he
measures in basis 1, for ``t = P`` in basis 0, and decodes ``b xor beta``.
For ``t = 1`` the channel reveals ``q`` directly and his measurement is not
used.  Whenever ``alpha xor beta = q v`` holds the decoding is correct, so
the success probability is ``omega + (1 - omega)/3``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eacode import qmath
from eacode.channel import (
    FiniteChannel,
    ChannelInput,
    ChannelOutput,
    parse_input_label,
    parse_output_label,
)
from eacode.errors import DomainError
from eacode.states import as_density_matrix

NO_SIGNAL_TOL = 1e-12
PROB_TOL = 1e-12
ANGLE_DIGITS = 15

IRRELEVANT = None
DEFAULT_BOB_CHOICE = {"1": IRRELEVANT, "2": 1, "P": 0}
# Bob's basis when his measurement is irrelevant (t = 1); beta is summed out.
T1_BASIS = 0


def ket(theta: float) -> np.ndarray:
    """``|theta> = cos(theta)|H> + sin(theta)|V>``."""
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


def _angle_of(p: np.ndarray) -> float | None:
    """Angle of a real rank-1 projector, or None when it is not of that form."""
    if np.max(np.abs(p.imag)) > 1e-12 or abs(np.trace(p).real - 1) > 1e-9:
        return None
    if np.max(np.abs(p @ p - p)) > 1e-9:
        return None
    c2, s2, cs = p[0, 0].real, p[1, 1].real, p[1, 0].real
    return float(0.5 * math.atan2(2 * cs, c2 - s2) % math.pi)


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Two-outcome qubit measurement ``(E0, E1)`` with ``E0 + E1 = I``.

    Bases built from an angle keep it in ``angle``; bases produced by the
    optimizer carry a recovered angle when the projectors are real and rank
    one, and ``None`` otherwise.
    """

    projectors: tuple[np.ndarray, np.ndarray]
    angle: float | None = None

    def __post_init__(self):
        e0, e1 = (np.array(p, dtype=complex) for p in self.projectors)
        if e0.shape != (2, 2) or e1.shape != (2, 2):
            raise DomainError("qubit measurement elements must be 2x2")
        if not (qmath.is_hermitian(e0) and qmath.is_hermitian(e1)):
            raise DomainError("measurement elements must be Hermitian")
        if np.max(np.abs(e0 + e1 - qmath.I2)) > 1e-12:
            raise DomainError("measurement elements must sum to the identity")
        e0.setflags(write=False)
        e1.setflags(write=False)
        object.__setattr__(self, "projectors", (e0, e1))
        if self.angle is None:
            object.__setattr__(self, "angle", _angle_of(e0))

    @classmethod
    def from_angle(cls, theta: float) -> "MeasurementBasis":
        """Basis ``(|theta>, |theta + pi/2>)``; outcome 0 is ``|theta>``."""
        theta = float(theta)
        return cls((qmath.projector(ket(theta)), qmath.projector(ket(theta + math.pi / 2))),
                   theta)

    @classmethod
    def from_projector(cls, e0) -> "MeasurementBasis":
        e0 = np.asarray(e0, dtype=complex)
        return cls((e0, qmath.I2 - e0))

    def __getitem__(self, outcome: int) -> np.ndarray:
        return self.projectors[outcome]


@dataclass(frozen=True, eq=False)
class MeasurementStrategy:
    alice: tuple[MeasurementBasis, MeasurementBasis]
    bob: tuple[MeasurementBasis, MeasurementBasis]
    bob_choice: dict = field(default_factory=lambda: dict(DEFAULT_BOB_CHOICE))

    def __post_init__(self):
        choice = {str(k): v for k, v in self.bob_choice.items()}
        if set(choice) != {"1", "2", "P"}:
            raise DomainError("bob_choice must be given for t = 1, 2 and P")
        for t, v in choice.items():
            if v in ("irrelevant", None):
                choice[t] = IRRELEVANT
            elif int(v) in (0, 1):
                choice[t] = int(v)
            else:
                raise DomainError(f"bob_choice[{t}] must be 0, 1 or irrelevant")
        if choice["1"] is not IRRELEVANT:
            raise DomainError("Bob's measurement is irrelevant when t = 1")
        if choice["2"] is IRRELEVANT or choice["P"] is IRRELEVANT:
            raise DomainError("Bob must measure when t is 2 or P")
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "bob", tuple(self.bob))
        object.__setattr__(self, "bob_choice", choice)

    def bob_setting(self, t: str) -> int:
        """Basis Bob uses after seeing trit ``t`` (``T1_BASIS`` for t = 1)."""
        v = self.bob_choice[t]
        return T1_BASIS if v is IRRELEVANT else v

    @classmethod
    def from_angles(cls, alice_angles, bob_angles, bob_choice=None) -> "MeasurementStrategy":
        return cls(tuple(MeasurementBasis.from_angle(a) for a in alice_angles),
                   tuple(MeasurementBasis.from_angle(b) for b in bob_angles),
                   dict(bob_choice or DEFAULT_BOB_CHOICE))

    def angles(self) -> tuple[list, list]:
        return [b.angle for b in self.alice], [b.angle for b in self.bob]

    def to_json_obj(self) -> dict:
        def fmt(a):
            return None if a is None else float(f"{a:.{ANGLE_DIGITS}g}")

        alice, bob = self.angles()
        obj = {
            "alice_angles": [fmt(a) for a in alice],
            "bob_angles": [fmt(b) for b in bob],
            "bob_choice": {t: ("irrelevant" if v is IRRELEVANT else v)
                           for t, v in self.bob_choice.items()},
        }
        # Measurements without an angle are stored by their outcome-0 element.
        for side, bases, angs in (("alice", self.alice, alice), ("bob", self.bob, bob)):
            if any(a is None for a in angs):
                obj[f"{side}_projectors"] = [
                    [[[float(z.real), float(z.imag)] for z in row] for row in b[0]]
                    for b in bases]
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MeasurementStrategy":
        def side(name):
            if f"{name}_projectors" in obj:
                mats = np.asarray(obj[f"{name}_projectors"], dtype=float)
                return tuple(MeasurementBasis.from_projector(m[..., 0] + 1j * m[..., 1])
                             for m in mats)
            angles = obj.get(f"{name}_angles")
            if angles is None or len(angles) != 2 or any(a is None for a in angles):
                raise DomainError(f"strategy JSON needs two {name}_angles")
            return tuple(MeasurementBasis.from_angle(a) for a in angles)

        return cls(side("alice"), side("bob"), dict(obj.get("bob_choice", DEFAULT_BOB_CHOICE)))


def chsh_strategy() -> MeasurementStrategy:
    """Alice: pi/4 (q=0), 0 (q=1).  Bob: pi/8 (v=0), 3pi/8 (v=1)."""
    return MeasurementStrategy.from_angles([math.pi / 4, 0.0],
                                           [math.pi / 8, 3 * math.pi / 8])


def random_strategy(rng: np.random.Generator, real: bool = True) -> MeasurementStrategy:
    """Random rank-1 projective strategy with the default basis choices.

    ``real=True`` draws angles uniformly in ``[0, pi)``; otherwise the
    outcome-0 vectors are Haar random in C^2.
    """
    def basis():
        if real:
            return MeasurementBasis.from_angle(rng.uniform(0, math.pi))
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        return MeasurementBasis.from_projector(qmath.projector(v / np.linalg.norm(v)))

    return MeasurementStrategy((basis(), basis()), (basis(), basis()))


def save_strategy(strat: MeasurementStrategy, path) -> None:
    Path(path).write_text(json.dumps(strat.to_json_obj(), indent=2) + "\n")


def load_strategy(path) -> MeasurementStrategy:
    return MeasurementStrategy.from_json_obj(json.loads(Path(path).read_text()))


# -- Born rule -------------------------------------------------------------

def born(rho, a: np.ndarray, b: np.ndarray) -> float:
    """``Tr[(a (x) b) rho]`` for single-qubit operators ``a``, ``b``."""
    m = as_density_matrix(rho).matrix
    return float(np.real(np.trace(np.kron(a, b) @ m)))


def joint_probabilities(rho, strat: MeasurementStrategy) -> np.ndarray:
    """``P[q, v, alpha, beta] = Tr[(A^q_alpha (x) B^v_beta) rho]``."""
    m = as_density_matrix(rho).matrix.reshape(2, 2, 2, 2)
    a = np.array([[strat.alice[q][al] for al in (0, 1)] for q in (0, 1)])
    b = np.array([[strat.bob[v][be] for be in (0, 1)] for v in (0, 1)])
    # rho[i, j, k, l] with (i, j) Alice row/col and (k, l) Bob row/col.
    p = np.einsum("qaji,vblk,ikjl->qvab", a, b, m)
    return np.real(p)


@dataclass(frozen=True)
class RelationStats:
    """Probability that ``alpha xor beta = q v`` for each ``(q, v)``."""

    per_setting: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_setting))

    def __getitem__(self, qv) -> float:
        return float(self.per_setting[qv])


def correlation_omega(rho, strat: MeasurementStrategy) -> RelationStats:
    p = joint_probabilities(rho, strat)
    omega = np.zeros((2, 2))
    for q in (0, 1):
        for v in (0, 1):
            omega[q, v] = sum(p[q, v, al, be] for al in (0, 1) for be in (0, 1)
                              if al ^ be == q * v)
    return RelationStats(omega)


# -- encoding and decoding ----------------------------------------------------

def encode_input(q: int, alpha: int) -> ChannelInput:
    """Alice's channel input ``(b1, b2) = (q, alpha)``."""
    if q not in (0, 1) or alpha not in (0, 1):
        raise DomainError("q and alpha must be bits")
    return ChannelInput(q, alpha)


def decode(y: ChannelOutput, beta: int | None = None) -> int:
    """Bob's estimate of the message from channel output and outcome."""
    if y.t == "1":
        return y.b
    if beta is None:
        raise DomainError(f"Bob's outcome is needed to decode t = {y.t}")
    if beta not in (0, 1):
        raise DomainError("beta must be a bit")
    return y.b ^ beta


@dataclass(frozen=True)
class ButterflyLayout:
    """Where each ``(q, alpha)`` input and ``(t, b)`` output sits in a channel."""

    input_index: dict
    outputs: tuple


def butterfly_layout(ch: FiniteChannel) -> ButterflyLayout:
    """Validate that ``ch`` has butterfly-shaped labels, in any order."""
    if ch.num_inputs != 4 or ch.num_outputs != 6:
        raise DomainError(
            f"the butterfly decoder needs a 4-input, 6-output channel, got "
            f"{ch.num_inputs}x{ch.num_outputs}")
    try:
        inputs = [parse_input_label(s) for s in ch.input_labels]
        outputs = tuple(parse_output_label(s) for s in ch.output_labels)
    except DomainError as exc:
        raise DomainError(f"channel is not butterfly-shaped: {exc}") from None
    if len(set(inputs)) != 4 or len(set(outputs)) != 6:
        raise DomainError("channel labels must cover every (b1,b2) input and (t,b) output")
    index = {(x.b1, x.b2): i for i, x in enumerate(inputs)}
    return ButterflyLayout(index, outputs)


def exact_success(rho, strat: MeasurementStrategy, ch: FiniteChannel) -> float:
    """Probability that Bob decodes Alice's uniformly random bit correctly."""
    layout = butterfly_layout(ch)
    rho = as_density_matrix(rho)
    total = 0.0
    for q in (0, 1):
        for alpha in (0, 1):
            a_op = strat.alice[q][alpha]
            x = layout.input_index[encode_input(q, alpha)]
            for y_idx, y in enumerate(layout.outputs):
                py = ch.probs[x, y_idx]
                if py == 0:
                    continue
                if y.t == "1":
                    # Bob's measurement is irrelevant; beta summed out.
                    total += py * (decode(y) == q) * born(rho, a_op, qmath.I2)
                    continue
                v = strat.bob_setting(y.t)
                for beta in (0, 1):
                    if decode(y, beta) == q:
                        total += py * born(rho, a_op, strat.bob[v][beta])
    return float(0.5 * total)


# -- non-signaling boxes --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NonSignalingBox:
    """Conditional distribution ``table[q, v, alpha, beta]``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.size != 16:
            raise DomainError(f"box table needs 16 entries, got {t.size}")
        t = t.reshape(2, 2, 2, 2)
        if t.min() < -PROB_TOL or np.max(np.abs(t.sum(axis=(2, 3)) - 1)) > PROB_TOL:
            raise DomainError("each box distribution must be nonnegative and sum to 1")
        alice_marg = t.sum(axis=3)  # [q, v, alpha]
        bob_marg = t.sum(axis=2)  # [q, v, beta]
        if (np.max(np.abs(alice_marg[:, 0] - alice_marg[:, 1])) > NO_SIGNAL_TOL
                or np.max(np.abs(bob_marg[0] - bob_marg[1])) > NO_SIGNAL_TOL):
            raise DomainError("box is signaling")
        t = np.clip(t, 0.0, None)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def alice_marginal(self, q: int) -> np.ndarray:
        return self.table[q, 0].sum(axis=1)

    def to_json_obj(self) -> dict:
        return {"order": "q,v,alpha,beta", "table": self.table.reshape(-1).tolist()}

    @classmethod
    def from_json_obj(cls, obj) -> "NonSignalingBox":
        if isinstance(obj, dict):
            obj = obj.get("table")
        if obj is None:
            raise DomainError("box JSON needs a 'table' field")
        return cls(np.asarray(obj, dtype=float))


def pr_box() -> NonSignalingBox:
    """``alpha xor beta = q v`` with certainty and uniform marginals."""
    t = np.zeros((2, 2, 2, 2))
    for q, v, al, be in np.ndindex(2, 2, 2, 2):
        if al ^ be == q * v:
            t[q, v, al, be] = 0.5
    return NonSignalingBox(t)


def uniform_box() -> NonSignalingBox:
    return NonSignalingBox(np.full((2, 2, 2, 2), 0.25))


def quantum_box(rho, strat: MeasurementStrategy) -> NonSignalingBox:
    return NonSignalingBox(joint_probabilities(rho, strat))


def save_box(box: NonSignalingBox, path) -> None:
    Path(path).write_text(json.dumps(box.to_json_obj(), indent=2) + "\n")


def load_box(path) -> NonSignalingBox:
    return NonSignalingBox.from_json_obj(json.loads(Path(path).read_text()))


def box_success(box: NonSignalingBox, ch: FiniteChannel,
                bob_choice: dict | None = None) -> float:
    """Success probability with ``box`` in place of the quantum measurements."""
    if not isinstance(box, NonSignalingBox):
        box = NonSignalingBox(box)
    layout = butterfly_layout(ch)
    choice = dict(bob_choice or DEFAULT_BOB_CHOICE)
    total = 0.0
    for q, alpha in np.ndindex(2, 2):
        x = layout.input_index[(q, alpha)]
        for y_idx, y in enumerate(layout.outputs):
            py = ch.probs[x, y_idx]
            if y.t == "1":
                total += py * (decode(y) == q) * box.table[q, T1_BASIS, alpha].sum()
                continue
            v = choice[y.t]
            total += py * sum(box.table[q, v, alpha, beta]
                              for beta in (0, 1) if decode(y, beta) == q)
    return float(0.5 * total)
