"""Finite classical channels given by their conditional probability matrix.

The butterfly channel takes two input bits ``(b1, b2)`` and outputs a trit
``t`` drawn uniformly from ``{1, 2, P}`` together with one bit: ``b1`` when
``t = 1``, ``b2`` when ``t = 2`` and ``b1 xor b2`` when ``t = P``.

Canonical orderings (normative for every file format)::

    inputs:  (0,0) (0,1) (1,0) (1,1)
    outputs: (1,0) (1,1) (2,0) (2,1) (P,0) (P,1)
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from eacode.errors import DomainError

ROW_SUM_TOL = 1e-12
TRITS = ("1", "2", "P")


class ChannelInput(NamedTuple):
    b1: int
    b2: int

    @property
    def index(self) -> int:
        return 2 * self.b1 + self.b2

    @property
    def label(self) -> str:
        return f"({self.b1},{self.b2})"


class ChannelOutput(NamedTuple):
    t: str
    b: int

    @property
    def index(self) -> int:
        return 2 * TRITS.index(self.t) + self.b

    @property
    def label(self) -> str:
        return f"({self.t},{self.b})"


BUTTERFLY_INPUTS = tuple(ChannelInput(b1, b2) for b1 in (0, 1) for b2 in (0, 1))
BUTTERFLY_OUTPUTS = tuple(ChannelOutput(t, b) for t in TRITS for b in (0, 1))


def parse_output_label(label: str) -> ChannelOutput:
    """Parse a ``(t,b)`` output label such as ``"(P,1)"``."""
    s = label.strip().strip("()").replace(" ", "")
    try:
        t, b = s.split(",")
        b = int(b)
    except ValueError:
        raise DomainError(f"cannot parse channel output label {label!r}") from None
    if t not in TRITS or b not in (0, 1):
        raise DomainError(f"invalid channel output label {label!r}")
    return ChannelOutput(t, b)


def parse_input_label(label: str) -> ChannelInput:
    s = label.strip().strip("()").replace(" ", "")
    try:
        b1, b2 = (int(x) for x in s.split(","))
    except ValueError:
        raise DomainError(f"cannot parse channel input label {label!r}") from None
    if b1 not in (0, 1) or b2 not in (0, 1):
        raise DomainError(f"invalid channel input label {label!r}")
    return ChannelInput(b1, b2)


def _to_fraction(x) -> Fraction | None:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise DomainError(f"cannot parse probability {x!r}") from None
    return None


@dataclass(frozen=True, eq=False)
class FiniteChannel:
    """Row-stochastic matrix ``probs[x, y] = Pr[y | x]``.

    ``exact`` optionally holds the same matrix as ``Fraction`` rows; it is
    set when every entry is rational and enables exact code evaluation.
    """

    probs: np.ndarray
    input_labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()
    exact: tuple[tuple[Fraction, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise DomainError(f"channel matrix must be 2-D and non-empty, got shape {p.shape}")
        if np.any(~np.isfinite(p)) or p.min() < 0 or p.max() > 1:
            raise DomainError("channel probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1)) > ROW_SUM_TOL:
            raise DomainError("every channel row must sum to 1")
        n_in, n_out = p.shape
        in_labels = tuple(self.input_labels) or tuple(str(i) for i in range(n_in))
        out_labels = tuple(self.output_labels) or tuple(str(j) for j in range(n_out))
        if len(in_labels) != n_in or len(out_labels) != n_out:
            raise DomainError("label counts do not match the channel matrix")
        if self.exact is not None:
            ex = tuple(tuple(Fraction(v) for v in row) for row in self.exact)
            if any(sum(row) != 1 for row in ex):
                raise DomainError("exact channel rows must sum to exactly 1")
            object.__setattr__(self, "exact", ex)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "input_labels", in_labels)
        object.__setattr__(self, "output_labels", out_labels)

    @property
    def num_inputs(self) -> int:
        return self.probs.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.probs.shape[1]

    @classmethod
    def from_rows(cls, rows, input_labels=(), output_labels=()) -> "FiniteChannel":
        """Build from nested rows of numbers, ``Fraction`` or ``"p/q"`` strings."""
        fracs = [[_to_fraction(v) for v in row] for row in rows]
        exact = fracs if all(v is not None for row in fracs for v in row) else None
        floats = [[float(f) if f is not None else float(v) for v, f in zip(row, frow)]
                  for row, frow in zip(rows, fracs)]
        return cls(np.array(floats), tuple(input_labels), tuple(output_labels), exact)

    def permute_outputs(self, order: Sequence[int]) -> "FiniteChannel":
        """Channel with output columns reordered as ``order``."""
        order = list(order)
        exact = None
        if self.exact is not None:
            exact = tuple(tuple(row[j] for j in order) for row in self.exact)
        return FiniteChannel(self.probs[:, order], self.input_labels,
                             tuple(self.output_labels[j] for j in order), exact)


def butterfly_channel() -> FiniteChannel:
    third = Fraction(1, 3)
    rows = []
    for x in BUTTERFLY_INPUTS:
        shown = {"1": x.b1, "2": x.b2, "P": x.b1 ^ x.b2}
        rows.append([third if shown[y.t] == y.b else Fraction(0) for y in BUTTERFLY_OUTPUTS])
    return FiniteChannel.from_rows(rows, [x.label for x in BUTTERFLY_INPUTS],
                                   [y.label for y in BUTTERFLY_OUTPUTS])


def identity_channel(n: int) -> FiniteChannel:
    rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return FiniteChannel.from_rows(rows)


# -- sampling ---------------------------------------------------------------

def make_rng(seed) -> np.random.Generator:
    """Seeded PCG64 stream; ``seed`` may be an int or a ``SeedSequence``."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_output(ch: FiniteChannel, x: int, rng: np.random.Generator) -> int:
    if not 0 <= int(x) < ch.num_inputs:
        raise DomainError(f"input index {x} out of range for {ch.num_inputs} inputs")
    return int(sample_outputs(ch, np.array([x]), rng)[0])


def sample_outputs(ch: FiniteChannel, xs, rng: np.random.Generator) -> np.ndarray:
    """Vectorized inverse-CDF sampling, one uniform draw per input."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size and (xs.min() < 0 or xs.max() >= ch.num_inputs):
        raise DomainError("input index out of range")
    cdf = np.cumsum(ch.probs, axis=1)
    cdf[:, -1] = 1.0
    u = rng.random(xs.shape)
    ys = (u[..., None] >= cdf[xs]).sum(axis=-1)
    # Guard zero-probability trailing columns against rounding in the cumsum.
    return np.minimum(ys, ch.num_outputs - 1)


# -- truth tables -------------------------------------------------------------

def empirical_table(samples, num_inputs: int | None = None,
                    num_outputs: int | None = None) -> np.ndarray:
    """Raw count matrix from ``(input, output)`` index pairs."""
    pairs = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                       dtype=np.int64)
    if pairs.size == 0:
        raise DomainError("empirical table needs at least one sample")
    pairs = pairs.reshape(-1, 2)
    if pairs.min() < 0:
        raise DomainError("negative index in samples")
    n_in = num_inputs if num_inputs is not None else int(pairs[:, 0].max()) + 1
    n_out = num_outputs if num_outputs is not None else int(pairs[:, 1].max()) + 1
    if pairs[:, 0].max() >= n_in or pairs[:, 1].max() >= n_out:
        raise DomainError("sample index out of range")
    table = np.zeros((n_in, n_out))
    np.add.at(table, (pairs[:, 0], pairs[:, 1]), 1)
    return table


def normalize_rows(table) -> np.ndarray:
    t = np.asarray(table, dtype=float)
    if np.any(t < 0):
        raise DomainError("truth table entries must be nonnegative")
    sums = t.sum(axis=1, keepdims=True)
    return np.divide(t, sums, out=np.zeros_like(t), where=sums > 0)


def inquisition(n_exp, n_th) -> float:
    """Normalized overlap ``Tr(N_exp N_th^T) / Tr(N_th N_th^T)``.

    Both tables are row-normalized first, so raw counts may be passed.
    """
    a = np.asarray(n_exp.probs if isinstance(n_exp, FiniteChannel) else n_exp, dtype=float)
    b = np.asarray(n_th.probs if isinstance(n_th, FiniteChannel) else n_th, dtype=float)
    if a.shape != b.shape:
        raise DomainError(f"truth table shapes differ: {a.shape} vs {b.shape}")
    a = normalize_rows(a)
    b = normalize_rows(b)
    denom = np.trace(b @ b.T)
    if denom == 0:
        raise DomainError("ideal truth table is empty")
    return float(np.trace(a @ b.T) / denom)


# -- file formats -------------------------------------------------------------

def channel_to_json_obj(ch: FiniteChannel) -> dict:
    if ch.exact is not None:
        probs = [[str(v) for v in row] for row in ch.exact]
    else:
        probs = ch.probs.tolist()
    return {"input_labels": list(ch.input_labels), "output_labels": list(ch.output_labels),
            "probs": probs}


def channel_from_json_obj(obj: dict) -> FiniteChannel:
    if "probs" not in obj:
        raise DomainError("channel JSON needs a 'probs' field")
    return FiniteChannel.from_rows(obj["probs"], obj.get("input_labels", ()),
                                   obj.get("output_labels", ()))


def save_channel(ch: FiniteChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_json_obj(ch), indent=2) + "\n")


def load_channel(path) -> FiniteChannel:
    return channel_from_json_obj(json.loads(Path(path).read_text()))


def table_to_csv(table, output_labels, input_labels=None) -> str:
    t = np.asarray(table)
    input_labels = input_labels or [str(i) for i in range(t.shape[0])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", *output_labels])
    for label, row in zip(input_labels, t):
        w.writerow([label, *(f"{v:.12g}" for v in row)])
    return buf.getvalue()


def table_from_csv(text: str) -> tuple[np.ndarray, list[str], list[str]]:
    """Parse a truth-table CSV; returns ``(table, output_labels, input_labels)``."""
    rows = list(csv.reader(io.StringIO(text)))
    if len(rows) < 2:
        raise DomainError("truth-table CSV needs a header and at least one row")
    header = rows[0]
    has_input_col = header[0].strip().lower() == "input"
    out_labels = header[1:] if has_input_col else header
    in_labels, data = [], []
    for i, r in enumerate(rows[1:]):
        if not r:
            continue
        if has_input_col:
            in_labels.append(r[0])
            r = r[1:]
        else:
            in_labels.append(str(i))
        if len(r) != len(out_labels):
            raise DomainError(f"row {i} has {len(r)} entries, expected {len(out_labels)}")
        data.append([float(v) for v in r])
    return np.array(data), out_labels, in_labels
