import itertools
from fractions import Fraction

import numpy as np
import pytest

from eacode.channel import FiniteChannel, butterfly_channel, identity_channel
from eacode.classical_code import (
    ClassicalCode,
    all_codes,
    best_deterministic_code,
    evaluate_code,
    exhaustive_success_table,
    load_code,
    map_decoder,
    mixture_success,
    save_code,
)
from eacode.errors import DomainError, ResourceError

# Output order: (1,0) (1,1) (2,0) (2,1) (P,0) (P,1); input (0,1) = 1, (1,0) = 2.
SPLIT_CODE = ClassicalCode(2, (1, 2), (0, 1, 1, 0, 0, 0))


def test_split_code_is_five_sixths():
    assert evaluate_code(butterfly_channel(), SPLIT_CODE) == Fraction(5, 6)


def test_same_input_for_both_messages():
    ch = butterfly_channel()
    for dec in itertools.product((0, 1), repeat=6):
        assert evaluate_code(ch, ClassicalCode(2, (3, 3), dec)) <= Fraction(1, 2)


def test_code_00_11_with_map_decoder():
    ch = butterfly_channel()
    code = map_decoder(ch, (0, 3))
    value = evaluate_code(ch, code)
    # Oracle: best over all 64 decoders for this encoding.
    best = max(evaluate_code(ch, ClassicalCode(2, (0, 3), d))
               for d in itertools.product((0, 1), repeat=6))
    assert value == best == Fraction(5, 6)


def test_map_decoder_examples():
    ch = butterfly_channel()
    code = map_decoder(ch, (1, 2))
    labels = list(ch.output_labels)
    assert code.decoding[labels.index("(2,1)")] == 0
    assert code.decoding[labels.index("(1,0)")] == 0
    assert code.decoding[labels.index("(1,1)")] == 1
    assert code.decoding[labels.index("(2,0)")] == 1
    assert code.decoding[labels.index("(P,1)")] == 0
    assert code.decoding[labels.index("(P,0)")] == 0
    assert code.decoding == SPLIT_CODE.decoding


def test_map_is_optimal_for_every_encoding():
    ch = butterfly_channel()
    table = exhaustive_success_table(ch, 2)
    encodings = list(itertools.product(range(4), repeat=2))
    assert table.shape == (16, 64)
    for e, enc in enumerate(encodings):
        assert float(evaluate_code(ch, map_decoder(ch, enc))) >= table[e].max() - 1e-15


def test_best_code_butterfly():
    code, value = best_deterministic_code(butterfly_channel(), 2)
    assert value == Fraction(5, 6)
    assert evaluate_code(butterfly_channel(), code) == Fraction(5, 6)
    assert exhaustive_success_table(butterfly_channel(), 2).max() <= 5 / 6 + 1e-15


def test_exhaustive_table_matches_exact_evaluation():
    ch = butterfly_channel()
    table = exhaustive_success_table(ch, 2).reshape(-1)
    for value, code in zip(table, all_codes(ch, 2)):
        assert value == pytest.approx(float(evaluate_code(ch, code)), abs=1e-15)


def test_best_code_single_message():
    assert best_deterministic_code(butterfly_channel(), 1)[1] == 1


def test_best_code_identity_channel():
    assert best_deterministic_code(identity_channel(4), 4)[1] == 1


def test_best_code_butterfly_four_messages():
    _, value = best_deterministic_code(butterfly_channel(), 4)
    # Oracle: brute force over all 4^4 encodings x 4^6 decodings in floats.
    brute = exhaustive_success_table(butterfly_channel(), 4).max()
    assert float(value) == pytest.approx(brute, abs=1e-15)
    assert value == Fraction(1, 2)


def test_best_code_float_channel():
    ch = FiniteChannel(np.array([[0.9, 0.1], [0.2, 0.8]]))
    code, value = best_deterministic_code(ch, 2)
    assert isinstance(value, float)
    assert value == pytest.approx(0.85)


def test_resource_limit():
    with pytest.raises(ResourceError) as info:
        best_deterministic_code(butterfly_channel(), 12)
    assert info.value.estimate == 4**12


def test_mixture_examples():
    ch = butterfly_channel()
    assert mixture_success(ch, [(SPLIT_CODE, 1)]) == evaluate_code(ch, SPLIT_CODE)
    bad = ClassicalCode(2, (3, 3), (0,) * 6)
    assert evaluate_code(ch, bad) == Fraction(1, 2)
    assert mixture_success(ch, [(SPLIT_CODE, Fraction(1, 2)), (bad, Fraction(1, 2))]) \
        == Fraction(2, 3)


def test_random_mixtures_never_beat_best(rng):
    ch = butterfly_channel()
    _, best = best_deterministic_code(ch, 2)
    codes = list(all_codes(ch, 2))
    for _ in range(50):
        picks = rng.choice(len(codes), size=10)
        w = rng.random(10)
        w /= w.sum()
        value = mixture_success(ch, [(codes[i], wi) for i, wi in zip(picks, w)])
        assert value <= float(best) + 1e-12


def test_mixture_bad_weights():
    ch = butterfly_channel()
    with pytest.raises(DomainError):
        mixture_success(ch, [(SPLIT_CODE, 0.5)])
    with pytest.raises(DomainError):
        mixture_success(ch, [(SPLIT_CODE, 1.5), (SPLIT_CODE, -0.5)])


def test_malformed_codes():
    ch = butterfly_channel()
    with pytest.raises(DomainError):
        evaluate_code(ch, ClassicalCode(2, (0, 9), (0,) * 6))
    with pytest.raises(DomainError):
        evaluate_code(ch, ClassicalCode(2, (0, 1), (0,) * 5))
    with pytest.raises(DomainError):
        ClassicalCode(2, (0, 1), (0, 2, 0, 0, 0, 0))


def test_code_json_round_trip(tmp_path):
    path = tmp_path / "code.json"
    save_code(SPLIT_CODE, path)
    assert load_code(path) == SPLIT_CODE
