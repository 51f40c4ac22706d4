import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swipegan.errors import InvalidWord, UnknownCharacter, ValidationError
from swipegan.layout import (
    KeyBox,
    KeyboardLayout,
    key_center,
    load_layout,
    reference_qwerty,
    save_layout,
    word_to_via_points,
)

words = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12)


@pytest.mark.parametrize(
    "c, expected",
    [("q", (0.05, 1 / 6)), ("a", (0.10, 0.5)), ("m", (0.80, 5 / 6)), ("p", (0.95, 1 / 6))],
)
def test_reference_centers(layout, c, expected):
    assert key_center(layout, c) == pytest.approx(expected, abs=1e-12)


def test_unknown_character(layout):
    with pytest.raises(UnknownCharacter):
        key_center(layout, "!")


def test_layout_invariants(layout):
    assert layout.alphabet == "abcdefghijklmnopqrstuvwxyz"
    centers = [b.center for b in layout.keys.values()]
    assert len(set(centers)) == 26
    assert all(0 < x < 1 and 0 < y < 1 for x, y in centers)
    assert all(b.w == 0.1 and b.h == pytest.approx(1 / 3) for b in layout.keys.values())


def test_layout_rejects_bad_geometry():
    with pytest.raises(ValidationError):
        KeyBox(0.5, 0.5, 0.0, 0.3)
    with pytest.raises(ValidationError):
        KeyboardLayout("ab", {"a": KeyBox(0.5, 0.5, 0.1, 0.1), "b": KeyBox(0.5, 0.5, 0.1, 0.1)})
    with pytest.raises(ValidationError):
        KeyboardLayout("ab", {"a": KeyBox(0.5, 0.5, 0.1, 0.1)})
    with pytest.raises(ValidationError):
        KeyboardLayout("a", {"a": KeyBox(1.0, 0.5, 0.1, 0.1)})


def test_via_points_examples(layout):
    go = word_to_via_points(layout, "go")
    assert np.array_equal(go, [key_center(layout, "g"), key_center(layout, "o")])
    hello = word_to_via_points(layout, "hello")
    assert np.array_equal(hello, [key_center(layout, c) for c in "helo"])
    assert np.array_equal(word_to_via_points(layout, "a"), [key_center(layout, "a")])


@pytest.mark.parametrize("bad", ["", "héllo", "a b", "Go"])
def test_via_points_invalid(layout, bad):
    with pytest.raises(InvalidWord):
        word_to_via_points(layout, bad)


@given(words)
def test_via_count_matches_collapse(w):
    layout = reference_qwerty()
    dup_pairs = sum(1 for a, b in zip(w, w[1:]) if a == b)
    assert len(word_to_via_points(layout, w)) == len(w) - dup_pairs


@given(words)
def test_via_reverse_and_exact_centers(w):
    layout = reference_qwerty()
    fwd = word_to_via_points(layout, w)
    assert np.array_equal(word_to_via_points(layout, w[::-1]), fwd[::-1])
    centers = {b.center for b in layout.keys.values()}
    assert all(tuple(p) in centers for p in fwd)


def test_layout_json_roundtrip_is_bit_exact(tmp_path, layout):
    dest = tmp_path / "qwerty.json"
    save_layout(layout, dest)
    doc = json.loads(dest.read_text())
    assert set(doc) == {"alphabet", "keys"}
    assert set(doc["keys"]["q"]) == {"cx", "cy", "w", "h"}
    back = load_layout(dest)
    assert back.alphabet == layout.alphabet
    for c in layout.alphabet:
        assert back.keys[c] == layout.keys[c]
    save_layout(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == dest.read_bytes()
