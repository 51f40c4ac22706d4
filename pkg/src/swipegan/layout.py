"""Normalized keyboard geometry and word -> via-point mapping."""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from swipegan._io import atomic_write_text
from swipegan.errors import InvalidWord, ParseError, UnknownCharacter, ValidationError

ALPHABET = string.ascii_lowercase
REFERENCE_NAME = "qwerty-ref"
REFERENCE_KEY_WIDTH = 0.1

_ROWS = ("qwertyuiop", "asdfghjkl", "zxcvbnm")
_ROW_OFFSETS = (0.0, 0.05, 0.15)
_ROW_CENTERS = (1.0 / 6.0, 0.5, 5.0 / 6.0)


@dataclass(frozen=True)
class KeyBox:
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ValidationError(f"key extent out of (0, 1]: w={self.w}, h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)


@dataclass(frozen=True)
class KeyboardLayout:
    alphabet: str
    keys: dict[str, KeyBox] = field(repr=False)
    name: str = REFERENCE_NAME

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValidationError("alphabet has repeated characters")
        if set(self.keys) != set(self.alphabet):
            missing = sorted(set(self.alphabet) - set(self.keys))
            extra = sorted(set(self.keys) - set(self.alphabet))
            raise ValidationError(f"keys do not match alphabet (missing {missing}, extra {extra})")
        seen = set()
        for c, box in self.keys.items():
            if not (0.0 < box.cx < 1.0 and 0.0 < box.cy < 1.0):
                raise ValidationError(f"center of {c!r} outside the open unit square")
            if box.center in seen:
                raise ValidationError(f"center of {c!r} coincides with another key")
            seen.add(box.center)

    def __contains__(self, c: str) -> bool:
        return c in self.keys

    @property
    def key_width(self) -> float:
        return float(np.median([b.w for b in self.keys.values()]))

    def to_dict(self) -> dict:
        return {
            "alphabet": self.alphabet,
            "keys": {c: {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h} for c, b in self.keys.items()},
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = REFERENCE_NAME) -> "KeyboardLayout":
        try:
            keys = {
                c: KeyBox(float(k["cx"]), float(k["cy"]), float(k["w"]), float(k["h"]))
                for c, k in data["keys"].items()
            }
            return cls(alphabet=str(data["alphabet"]), keys=keys, name=data.get("name", name))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"malformed layout: {exc!r}") from exc


def reference_qwerty() -> KeyboardLayout:
    """Canonical three-row layout in the unit square (row heights 1/3, key width 0.1)."""
    keys = {}
    for row, offset, cy in zip(_ROWS, _ROW_OFFSETS, _ROW_CENTERS):
        for i, c in enumerate(row):
            keys[c] = KeyBox(offset + i * 0.1 + 0.05, cy, 0.1, 1.0 / 3.0)
    return KeyboardLayout(alphabet=ALPHABET, keys={c: keys[c] for c in ALPHABET})


def key_center(layout: KeyboardLayout, c: str) -> tuple[float, float]:
    try:
        return layout.keys[c].center
    except KeyError:
        raise UnknownCharacter(f"character {c!r} not in layout alphabet") from None


def collapse_repeats(word: str) -> str:
    return "".join(c for i, c in enumerate(word) if i == 0 or c != word[i - 1])


def validate_word(layout: KeyboardLayout, word: str) -> None:
    if not word:
        raise InvalidWord("empty word")
    bad = sorted({c for c in word if c not in layout.keys})
    if bad:
        raise InvalidWord(f"word {word!r} has characters outside the layout: {''.join(bad)!r}")


def word_to_via_points(layout: KeyboardLayout, word: str) -> np.ndarray:
    """Key centers of ``word`` with consecutive duplicate letters collapsed, shape (m, 2)."""
    validate_word(layout, word)
    return np.array([layout.keys[c].center for c in collapse_repeats(word)], dtype=np.float64)


def save_layout(layout: KeyboardLayout, dest) -> None:
    atomic_write_text(dest, json.dumps(layout.to_dict(), indent=1) + "\n")


def load_layout(source) -> KeyboardLayout:
    try:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"layout is not valid JSON: {exc.msg}", exc.lineno) from exc
    for c, k in data.get("keys", {}).items():
        if not all(math.isfinite(float(k.get(f, "nan"))) for f in ("cx", "cy", "w", "h")):
            raise ParseError(f"non-finite geometry for key {c!r}")
    return KeyboardLayout.from_dict(data, name=Path(source).stem)
