"""Deterministic classical codes for one use of a finite channel.

With a uniform prior on ``M`` messages the success probability of a code is
``(1/M) sum_q sum_y Pr[y | enc(q)] [dec(y) = q]``.  Shared randomness only
averages such values, so the best deterministic code is optimal; the
functions here find it by enumerating encodings and attaching the MAP
decoder.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from eacode.channel import FiniteChannel
from eacode.errors import DomainError, ResourceError

# Encodings enumerated before best_deterministic_code gives up.
MAX_ENCODINGS = 2_000_000


@dataclass(frozen=True)
class ClassicalCode:
    """``encoding[q]`` is an input index, ``decoding[y]`` a message index."""

    num_messages: int
    encoding: tuple[int, ...]
    decoding: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "encoding", tuple(int(x) for x in self.encoding))
        object.__setattr__(self, "decoding", tuple(int(m) for m in self.decoding))
        if self.num_messages < 1:
            raise DomainError("a code needs at least one message")
        if len(self.encoding) != self.num_messages:
            raise DomainError(f"encoding has {len(self.encoding)} entries for "
                              f"{self.num_messages} messages")
        if any(not 0 <= m < self.num_messages for m in self.decoding):
            raise DomainError("decoding maps an output to an unknown message")

    def check(self, ch: FiniteChannel) -> None:
        if any(not 0 <= x < ch.num_inputs for x in self.encoding):
            raise DomainError("encoding uses an input the channel does not have")
        if len(self.decoding) != ch.num_outputs:
            raise DomainError(f"decoding has {len(self.decoding)} entries for "
                              f"{ch.num_outputs} outputs")

    def to_json_obj(self) -> dict:
        return {"encoding": list(self.encoding), "decoding": list(self.decoding)}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ClassicalCode":
        try:
            enc, dec = obj["encoding"], obj["decoding"]
        except (KeyError, TypeError):
            raise DomainError("code JSON needs 'encoding' and 'decoding'") from None
        return cls(len(enc), enc, dec)


def _rows(ch: FiniteChannel, exact: bool):
    if exact and ch.exact is not None:
        return ch.exact
    return ch.probs


def evaluate_code(ch: FiniteChannel, code: ClassicalCode, exact: bool = True):
    """Success probability of ``code`` under a uniform message prior.

    Returns a ``Fraction`` when the channel carries exact entries and
    ``exact`` is true, a float otherwise.
    """
    code.check(ch)
    rows = _rows(ch, exact)
    total = sum(rows[code.encoding[q]][y]
                for y, q in enumerate(code.decoding))
    if isinstance(total, Fraction):
        return total / code.num_messages
    return float(total) / code.num_messages


def map_decoder(ch: FiniteChannel, encoding: Sequence[int]) -> ClassicalCode:
    """Attach the maximum-a-posteriori decoder to ``encoding``.

    Ties, including outputs that never occur, go to the smallest message
    index.
    """
    encoding = tuple(int(x) for x in encoding)
    if not encoding:
        raise DomainError("encoding must cover at least one message")
    if any(not 0 <= x < ch.num_inputs for x in encoding):
        raise DomainError("encoding uses an input the channel does not have")
    rows = _rows(ch, True)
    decoding = []
    for y in range(ch.num_outputs):
        likelihood = [rows[x][y] for x in encoding]
        # max() returns the first maximal element, i.e. the smallest index.
        decoding.append(max(range(len(encoding)), key=likelihood.__getitem__))
    return ClassicalCode(len(encoding), encoding, tuple(decoding))


def best_deterministic_code(ch: FiniteChannel, num_messages: int,
                            max_encodings: int = MAX_ENCODINGS):
    """Globally optimal deterministic code by enumeration of encodings.

    Every encoding is paired with its MAP decoder, which is optimal for that
    encoding, so the search over decoders is never needed.

    Returns
    -------
    (ClassicalCode, success)
        The first optimal code in lexicographic encoding order and its
        success probability (exact ``Fraction`` when available).
    """
    if num_messages < 1:
        raise DomainError("number of messages must be positive")
    size = ch.num_inputs ** num_messages
    if size > max_encodings:
        raise ResourceError(
            f"{size} encodings exceed the enumeration limit {max_encodings}", estimate=size)
    best_code, best_value = None, None
    for enc in itertools.product(range(ch.num_inputs), repeat=num_messages):
        code = map_decoder(ch, enc)
        value = evaluate_code(ch, code)
        if best_value is None or value > best_value:
            best_code, best_value = code, value
    return best_code, best_value


def all_codes(ch: FiniteChannel, num_messages: int):
    """Every (encoding, decoding) pair; only sensible for tiny channels."""
    for enc in itertools.product(range(ch.num_inputs), repeat=num_messages):
        for dec in itertools.product(range(num_messages), repeat=ch.num_outputs):
            yield ClassicalCode(num_messages, enc, dec)


def exhaustive_success_table(ch: FiniteChannel, num_messages: int) -> np.ndarray:
    """Float success of every code, shape ``(encodings, decodings)``.

    Independent of the MAP shortcut: it scores all decoders directly.
    """
    encs = np.array(list(itertools.product(range(ch.num_inputs), repeat=num_messages)))
    decs = np.array(list(itertools.product(range(num_messages), repeat=ch.num_outputs)))
    # lik[e, q, y] = Pr[y | enc_e(q)]
    lik = ch.probs[encs]
    onehot = decs[:, None, :] == np.arange(num_messages)[None, :, None]  # (d, q, y)
    return np.einsum("eqy,dqy->ed", lik, onehot) / num_messages


def mixture_success(ch: FiniteChannel, codes, exact: bool = True):
    """Success of a shared-randomness mixture ``[(code, weight), ...]``."""
    codes = list(codes)
    if not codes:
        raise DomainError("mixture needs at least one code")
    weights = [w for _, w in codes]
    if any(w < 0 for w in weights):
        raise DomainError("mixture weights must be nonnegative")
    if all(isinstance(w, (int, Fraction)) for w in weights):
        if sum(weights) != 1:
            raise DomainError("mixture weights must sum to 1")
    elif not math.isclose(float(sum(weights)), 1.0, abs_tol=1e-12):
        raise DomainError("mixture weights must sum to 1")
    values = [evaluate_code(ch, c, exact) for c, _ in codes]
    if all(isinstance(v, Fraction) for v in values) and all(
            isinstance(w, (int, Fraction)) for w in weights):
        return sum(Fraction(w) * v for v, w in zip(values, weights))
    return float(sum(float(w) * float(v) for v, w in zip(values, weights)))


def save_code(code: ClassicalCode, path) -> None:
    Path(path).write_text(json.dumps(code.to_json_obj(), indent=2) + "\n")


def load_code(path) -> ClassicalCode:
    return ClassicalCode.from_json_obj(json.loads(Path(path).read_text()))
