import json
from fractions import Fraction

import numpy as np
import pytest

from eacode import channel as chan
from eacode.channel import (
    FiniteChannel,
    butterfly_channel,
    empirical_table,
    inquisition,
    make_rng,
    sample_output,
    sample_outputs,
)
from eacode.errors import DomainError

OUTPUTS = ["(1,0)", "(1,1)", "(2,0)", "(2,1)", "(P,0)", "(P,1)"]


def row(ch, label):
    return dict(zip(ch.output_labels, ch.probs[ch.input_labels.index(label)]))


def test_butterfly_orderings():
    ch = butterfly_channel()
    assert ch.input_labels == ("(0,0)", "(0,1)", "(1,0)", "(1,1)")
    assert list(ch.output_labels) == OUTPUTS


def test_butterfly_row_01():
    r = row(butterfly_channel(), "(0,1)")
    support = {k for k, v in r.items() if v > 0}
    assert support == {"(1,0)", "(2,1)", "(P,1)"}
    assert all(v == pytest.approx(1 / 3) for k, v in r.items() if k in support)


def test_butterfly_row_00():
    r = row(butterfly_channel(), "(0,0)")
    assert {k for k, v in r.items() if v > 0} == {"(1,0)", "(2,0)", "(P,0)"}


def test_butterfly_follows_rule():
    ch = butterfly_channel()
    for x, x_label in enumerate(ch.input_labels):
        b1, b2 = (int(c) for c in x_label.strip("()").split(","))
        for y, y_label in enumerate(ch.output_labels):
            t, b = y_label.strip("()").split(",")
            shown = {"1": b1, "2": b2, "P": b1 ^ b2}[t]
            assert ch.exact[x][y] == (Fraction(1, 3) if shown == int(b) else 0)


def test_butterfly_stochastic_and_graph_structure():
    ch = butterfly_channel()
    assert np.allclose(ch.probs.sum(axis=1), 1, atol=1e-12)
    assert all(sum(r) == 1 for r in ch.exact)
    assert np.all((ch.probs > 0).sum(axis=1) == 3)
    # Each output edge of the graph touches exactly two input vertices.
    assert np.all((ch.probs > 0).sum(axis=0) == 2)


def test_channel_validation():
    with pytest.raises(DomainError):
        FiniteChannel(np.array([[0.5, 0.4]]))
    with pytest.raises(DomainError):
        FiniteChannel(np.array([[1.5, -0.5]]))
    with pytest.raises(DomainError):
        FiniteChannel(np.array([[1.0]]), ("a", "b"))


def test_sample_support():
    ch = butterfly_channel()
    rng = make_rng(3)
    seen = {ch.output_labels[sample_output(ch, 0, rng)] for _ in range(300)}
    assert seen == {"(1,0)", "(2,0)", "(P,0)"}


def test_sample_frequency_binomial_bound():
    ch = butterfly_channel()
    n = 10**6
    ys = sample_outputs(ch, np.zeros(n, dtype=int), make_rng(11))
    freq = np.mean(ys == OUTPUTS.index("(P,0)"))
    sigma = np.sqrt((1 / 3) * (2 / 3) / n)
    assert abs(freq - 1 / 3) <= 3 * sigma
    assert abs(freq - 1 / 3) <= 0.002


def test_sample_determinism():
    ch = butterfly_channel()
    xs = np.arange(4).repeat(50)
    a = sample_outputs(ch, xs, make_rng(99))
    b = sample_outputs(ch, xs, make_rng(99))
    assert np.array_equal(a, b)
    r1, r2 = make_rng(5), make_rng(5)
    assert [sample_output(ch, 2, r1) for _ in range(20)] == [sample_output(ch, 2, r2)
                                                            for _ in range(20)]


def test_sample_out_of_range():
    with pytest.raises(DomainError):
        sample_output(butterfly_channel(), 4, make_rng(0))


def test_sample_frequencies_converge_all_rows():
    ch = butterfly_channel()
    n = 10**6
    rng = make_rng(21)
    xs = rng.integers(0, 4, size=n)
    ys = sample_outputs(ch, xs, rng)
    table = empirical_table(np.stack([xs, ys], axis=1), 4, 6)
    row_n = table.sum(axis=1, keepdims=True)
    sigma = np.sqrt(ch.probs * (1 - ch.probs) / row_n)
    assert np.all(np.abs(table / row_n - ch.probs) <= 3 * sigma + 1e-15)


def test_empirical_table_single():
    t = empirical_table([(0, 0)])
    assert t.shape == (1, 1) and t[0, 0] == 1


def test_empirical_table_conservation():
    ch = butterfly_channel()
    ys = sample_outputs(ch, np.zeros(300, dtype=int), make_rng(1))
    t = empirical_table([(0, y) for y in ys], 4, 6)
    assert t[0].sum() == 300


def test_empirical_table_concentration():
    ch = butterfly_channel()
    rng = make_rng(8)
    xs = rng.integers(0, 4, size=200_000)
    ys = sample_outputs(ch, xs, rng)
    t = chan.normalize_rows(empirical_table(np.stack([xs, ys], axis=1), 4, 6))
    assert np.max(np.abs(t - ch.probs)) < 0.01


def test_empirical_table_empty():
    with pytest.raises(DomainError):
        empirical_table([])


def test_inquisition_self():
    ch = butterfly_channel()
    assert inquisition(ch.probs, ch.probs) == 1.0


def test_inquisition_uniform():
    ch = butterfly_channel()
    uniform = np.full((4, 6), 1 / 6)
    # Oracle: direct trace arithmetic.
    oracle = np.trace(uniform @ ch.probs.T) / np.trace(ch.probs @ ch.probs.T)
    assert oracle == pytest.approx((4 * 3 * (1 / 6) * (1 / 3)) / (4 * 3 * (1 / 3) ** 2))
    assert inquisition(uniform, ch.probs) == pytest.approx(0.5, abs=1e-12)


def test_inquisition_normalizes_counts():
    ch = butterfly_channel()
    assert inquisition(ch.probs * 3000, ch.probs) == pytest.approx(1.0, abs=1e-12)


def test_inquisition_empirical():
    ch = butterfly_channel()
    rng = make_rng(2024)
    xs = rng.integers(0, 4, size=10**6)
    ys = sample_outputs(ch, xs, rng)
    table = empirical_table(np.stack([xs, ys], axis=1), 4, 6)
    assert inquisition(table, ch) >= 0.999


def test_inquisition_dimension_mismatch():
    with pytest.raises(DomainError):
        inquisition(np.ones((4, 5)), butterfly_channel().probs)


def test_channel_json_round_trip(tmp_path):
    ch = butterfly_channel()
    path = tmp_path / "ch.json"
    chan.save_channel(ch, path)
    obj = json.loads(path.read_text())
    assert set(obj) == {"input_labels", "output_labels", "probs"}
    back = chan.load_channel(path)
    assert back.exact == ch.exact
    assert np.array_equal(back.probs, ch.probs)
    assert back.output_labels == ch.output_labels


def test_channel_json_floats_have_no_exact_form():
    ch = chan.channel_from_json_obj({"probs": [[0.25, 0.75], [0.5, 0.5]]})
    assert ch.exact is None
    assert ch.num_inputs == 2


def test_truth_table_csv_round_trip():
    ch = butterfly_channel()
    text = chan.table_to_csv(ch.probs * 30, ch.output_labels, ch.input_labels)
    # Labels contain commas, so the header cells are quoted.
    assert text.splitlines()[0] == "input," + ",".join(f'"{o}"' for o in OUTPUTS)
    table, out_labels, in_labels = chan.table_from_csv(text)
    assert out_labels == OUTPUTS
    assert np.allclose(table, ch.probs * 30)


def test_permute_outputs_keeps_labels_with_columns():
    ch = butterfly_channel()
    order = [5, 3, 1, 0, 2, 4]
    perm = ch.permute_outputs(order)
    for new_j, old_j in enumerate(order):
        assert perm.output_labels[new_j] == ch.output_labels[old_j]
        assert np.array_equal(perm.probs[:, new_j], ch.probs[:, old_j])
