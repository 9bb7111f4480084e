import math

import pytest

from asmeval.metrics import (
    EPSILON, bleu4, bleu_tokens, compilation_accuracy, edit_similarity, exact_match,
    metric_vector, normalize_text, sacre_tokens, sacrebleu_like,
)


@pytest.mark.parametrize("pred,ref,em", [
    ("xor eax, eax", "xor eax, eax", 1),
    ("xor eax, eax", "xor ebx, ebx", 0),
    ("a\n", "a", 1),
    ("mov eax, 1   \npush eax", "mov eax, 1\npush eax", 1),
    ("mov eax, 1\\npush eax", "mov eax, 1\npush eax", 1),
])
def test_exact_match(pred, ref, em):
    assert exact_match(pred, ref) == em


def test_normalize_text():
    assert normalize_text("a  \n\n  b\\n") == "a\n  b"


@pytest.mark.parametrize("pred,ref,value", [
    ("abc", "abc", 1.0), ("abc", "abd", 2 / 3), ("", "abc", 0.0), ("", "", 1.0),
])
def test_edit_similarity(pred, ref, value):
    assert edit_similarity(pred, ref) == pytest.approx(value, abs=1e-12)


def test_bleu_tokenizer_separates_commas_and_brackets():
    assert bleu_tokens("mov eax,[esi+4]") == ["mov", "eax", ",", "[", "esi+4", "]"]
    assert sacre_tokens("mov eax,[esi+4]") == ["mov", "eax", ",", "[", "esi", "+", "4", "]"]


def test_bleu_identical_is_one():
    assert bleu4("xor ecx, ecx\nmul ecx", "xor ecx, ecx\nmul ecx") == 1.0


def test_bleu_epsilon_smoothing_value():
    # tokens: mov eax , ebx | mov eax , ecx -> 3/4, 2/3, 1/2, 0/1 ; brevity 1
    expected = math.exp((math.log(3 / 4) + math.log(2 / 3) + math.log(1 / 2) + math.log(1e-9 / 1)) / 4)
    assert bleu4("mov eax, ebx", "mov eax, ecx") == pytest.approx(expected, rel=1e-12)
    assert expected < 1


def test_bleu_brevity_penalty():
    # pred 2 tokens, ref 4 tokens, unigrams+bigrams all hit, no 3/4-grams in pred
    pred, ref = "push eax", "push eax push eax"
    p = [1.0, 1.0, EPSILON, EPSILON]
    expected = math.exp(1 - 4 / 2) * math.exp(sum(map(math.log, p)) / 4)
    assert bleu4(pred, ref) == pytest.approx(expected, rel=1e-12)


def test_bleu_empty_prediction():
    assert bleu4("", "xor eax, eax") == 0.0
    assert bleu4("", "") == 1.0


def test_sacrebleu_ignores_comma_spacing():
    assert sacre_tokens("mov eax,ebx") == sacre_tokens("mov eax, ebx")
    assert sacrebleu_like("mov eax,ebx", "mov eax, ebx") == 1.0


def test_sacrebleu_disjoint_floor():
    # one token each, no overlap: unigram precision eps/1, higher orders empty on both sides
    assert sacrebleu_like("nop", "ret") == pytest.approx(EPSILON ** 0.25, rel=1e-12)


@pytest.mark.parametrize("text,ca", [
    ("xor eax, eax", 1), ("mov eax,", 0), ("je loop", 1), ("cmp BYTE al, 2", 1), ("mov eax, bl", 0),
])
def test_compilation_accuracy(text, ca):
    assert compilation_accuracy(text) == ca


def test_metric_vector_fields():
    v = metric_vector("xor eax, eax", "xor eax, eax").as_dict()
    assert v == {"ca": 1, "bleu4": 1.0, "sacrebleu": 1.0, "edit": 1.0, "em": 1}
