import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from galaxy.embedding import DIM, cosine, embed_text, tokenize

texts = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=0x2FF),
                max_size=120)


def test_dimension_and_dtype():
    v = embed_text("schedule a meeting")
    assert v.shape == (DIM,)
    assert v.dtype == np.float64


def test_empty_text_is_zero():
    assert not embed_text("").any()
    assert not embed_text("   \t ").any()


def test_deterministic():
    a = embed_text("buy groceries tomorrow morning")
    b = embed_text("buy groceries tomorrow morning")
    assert np.array_equal(a, b)


def test_case_and_whitespace_normalized():
    assert np.array_equal(embed_text("Buy  Milk"), embed_text("buy milk"))


def test_related_texts_closer_than_unrelated():
    a = embed_text("review the overnight email inbox")
    b = embed_text("review the morning email inbox")
    c = embed_text("water the balcony plants")
    assert cosine(a, b) > cosine(a, c)


@given(texts)
def test_nonempty_token_text_has_unit_norm(text):
    v = embed_text(text)
    if tokenize(text):
        assert abs(float(np.linalg.norm(v)) - 1.0) < 1e-9
    else:
        assert not v.any()


@given(texts, texts)
def test_cosine_bounded(a, b):
    va, vb = embed_text(a), embed_text(b)
    assert -1.0 - 1e-9 <= cosine(va, vb) <= 1.0 + 1e-9


@given(texts)
def test_cosine_self_is_one(text):
    v = embed_text(text)
    if tokenize(text):
        assert abs(cosine(v, v) - 1.0) < 1e-9


def test_zero_vector_cosine_is_zero():
    assert cosine(embed_text(""), embed_text("anything")) == 0.0
