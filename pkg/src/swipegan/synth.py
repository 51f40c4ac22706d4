"""Spline path synthesis and a parametric user-style simulator.

Two corpus generators live here:

* ``SYNTHETIC``: a natural cubic spline through the key centers of a word.
* ``USER_STYLE``: the spline passed through :func:`apply_user_style`, which
  injects overshoot, corner cutting, lateral excursions and uneven speed. It
  stands in for real user paths, which this package does not have.

Every path gets its own seed derived from ``(base_seed, word, index)`` so the
result does not depend on generation order.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.ndimage import gaussian_filter1d

from swipegan.errors import InvalidArgument, InvalidWord, ValidationError
from swipegan.layout import (
    REFERENCE_KEY_WIDTH,
    KeyboardLayout,
    reference_qwerty,
    validate_word,
    word_to_via_points,
)
from swipegan.pathcore import DEFAULT_LENGTH, Corpus, Path, Source, resample_points

_DENSE = 400  # spline evaluations per segment for arc-length inversion
_STYLE_JITTER = 0.3  # +-30% per-path perturbation of style magnitudes


class Mode(str, Enum):
    SYNTHETIC = "synthetic"
    USER_STYLE = "user"


@dataclass(frozen=True)
class StyleParams:
    overshoot_scale: float = 0.0
    excursion_amplitude: float = 0.0
    excursion_wavelength: float = 0.5
    corner_cut: float = 0.0
    speed_warp: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.overshoot_scale < 0:
            raise ValidationError("overshoot_scale must be >= 0")
        if self.excursion_amplitude < 0:
            raise ValidationError("excursion_amplitude must be >= 0")
        if not self.excursion_wavelength > 0:
            raise ValidationError("excursion_wavelength must be > 0")
        if not 0.0 <= self.corner_cut < 1.0:
            raise ValidationError("corner_cut must lie in [0, 1)")
        if self.speed_warp < 0:
            raise ValidationError("speed_warp must be >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StyleParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValidationError(f"unknown style fields: {sorted(unknown)}")
        return cls(**data)


# Desk-scale "typical user". Magnitudes are chosen so user-style paths are
# visibly distinct from splines but still recognizable.
DEFAULT_USER_STYLE = StyleParams(
    overshoot_scale=0.6,
    excursion_amplitude=0.06,
    excursion_wavelength=0.5,
    corner_cut=0.3,
    speed_warp=0.6,
)


def derive_seed(base_seed: int, word: str, index: int) -> int:
    """Per-path seed: first 8 bytes of sha256("base_seed:word:index")."""
    digest = hashlib.sha256(f"{int(base_seed)}:{word}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _natural_spline(via: np.ndarray) -> tuple[CubicSpline, np.ndarray]:
    chord = np.hypot(*np.diff(via, axis=0).T)
    knots = np.concatenate([[0.0], np.cumsum(chord)])
    return CubicSpline(knots, via, bc_type="natural", axis=0), knots


def synthesize_spline(layout: KeyboardLayout, word: str, n: int = DEFAULT_LENGTH) -> Path:
    """Natural cubic spline (chord-length knots) through the via points of ``word``.

    Samples are spread uniformly by arc length within each spline segment, with
    the number of intervals per segment proportional to its length. Every via
    point is therefore an exact sample of the returned path.
    """
    via = word_to_via_points(layout, word)
    m = via.shape[0]
    if n < max(2, m):
        raise InvalidArgument(f"n={n} is too small for {m} via points")
    if m == 1:
        # A one-key word is a tap; render it as a degenerate path at the key.
        return Path(word, np.repeat(via, n, axis=0), Source.SYNTHETIC)
    spline, knots = _natural_spline(via)

    seg_params, seg_lengths = [], []
    for j in range(m - 1):
        u = np.linspace(knots[j], knots[j + 1], _DENSE + 1)
        pts = spline(u)
        cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
        seg_params.append((u, cum))
        seg_lengths.append(cum[-1])
    counts = _allocate_intervals(np.array(seg_lengths), n - 1)

    out = [via[:1]]
    for j, ((u, cum), k) in enumerate(zip(seg_params, counts)):
        targets = np.linspace(0.0, cum[-1], k + 1)[1:-1]
        inner = spline(np.interp(targets, cum, u))
        out.append(inner.reshape(-1, 2))
        out.append(via[j + 1 : j + 2])
    points = np.concatenate(out, axis=0)
    assert points.shape == (n, 2)
    return Path(word, points, Source.SYNTHETIC)


def _allocate_intervals(lengths: np.ndarray, total: int) -> np.ndarray:
    """Split ``total`` intervals across segments proportionally to length, at least 1 each."""
    k = len(lengths)
    weights = lengths / lengths.sum() if lengths.sum() > 0 else np.full(k, 1.0 / k)
    ideal = weights * total
    counts = np.maximum(1, np.floor(ideal).astype(int))
    while counts.sum() > total:
        i = int(np.argmax(np.where(counts > 1, counts - ideal, -np.inf)))
        counts[i] -= 1
    while counts.sum() < total:
        i = int(np.argmax(ideal - counts))
        counts[i] += 1
    return counts


# -- user-style simulator -------------------------------------------------


def _via_indices(points: np.ndarray, via: np.ndarray) -> np.ndarray:
    """Index of the sample nearest each via point, searching forward in order."""
    idx, start = [], 0
    n = points.shape[0]
    for k, v in enumerate(via):
        remaining = len(via) - k - 1
        stop = max(start + 1, n - remaining)
        d = np.hypot(*(points[start:stop] - v).T)
        i = start + int(np.argmin(d))
        idx.append(i)
        start = min(i + 1, n - 1)
    return np.array(idx)


def _tangents(points: np.ndarray) -> np.ndarray:
    d = np.gradient(points, axis=0)
    norm = np.hypot(d[:, 0], d[:, 1])
    fallback = points[-1] - points[0]
    if np.hypot(*fallback) == 0:
        fallback = np.array([1.0, 0.0])
    fallback = fallback / np.hypot(*fallback)
    t = np.where(norm[:, None] > 1e-12, d / np.maximum(norm, 1e-12)[:, None], fallback)
    return t


def _cut_corners(pts: np.ndarray, amount: float) -> np.ndarray:
    n = pts.shape[0]
    smooth = gaussian_filter1d(pts, sigma=max(1.0, n / 24.0), axis=0, mode="nearest")
    # keep endpoints: remove the linear drift the filter introduces at the ends
    ramp = np.linspace(0.0, 1.0, n)[:, None]
    smooth = smooth - ((1 - ramp) * (smooth[0] - pts[0]) + ramp * (smooth[-1] - pts[-1]))
    return (1.0 - amount) * pts + amount * smooth


def _overshoot(pts: np.ndarray, via_idx: np.ndarray, scale: float, rng) -> np.ndarray:
    n = pts.shape[0]
    out = pts.copy()
    width = max(1.5, n / 40.0)
    steps = np.arange(n)
    for i in via_idx[1:]:
        lo = max(0, i - 3)
        incoming = pts[i] - pts[lo]
        norm = np.hypot(*incoming)
        if norm < 1e-12:
            continue
        mag = scale * REFERENCE_KEY_WIDTH * rng.uniform(0.5, 1.5)
        bump = np.exp(-0.5 * ((steps - i) / width) ** 2)
        out += mag * bump[:, None] * (incoming / norm)[None, :]
    return out


def _excursion(pts: np.ndarray, amplitude: float, wavelength: float, rng) -> np.ndarray:
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0:
        return pts.copy()
    u = s / total
    tang = _tangents(gaussian_filter1d(pts, sigma=2.0, axis=0, mode="nearest"))
    normal = np.column_stack([-tang[:, 1], tang[:, 0]])
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp = amplitude * rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    offset = amp * np.sin(np.pi * u) * np.sin(2.0 * np.pi * s / wavelength + phase)
    return pts + offset[:, None] * normal


def _speed_warp(pts: np.ndarray, strength: float, rng) -> np.ndarray:
    n = pts.shape[0]
    beta = float(np.clip(strength * rng.uniform(-1.0, 1.0), -0.9, 0.9))
    t = np.linspace(0.0, 1.0, n)
    warped = t + beta * np.sin(2.0 * np.pi * t) / (2.0 * np.pi)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return pts.copy()
    keep = np.concatenate([[True], seg > 0])
    target = warped * s[-1]
    out = np.column_stack([np.interp(target, s[keep], pts[keep, 0]), np.interp(target, s[keep], pts[keep, 1])])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def apply_user_style(path: Path, style: StyleParams, layout: KeyboardLayout | None = None) -> Path:
    """Perturb ``path`` with simulated user idiosyncrasies, deterministically in ``style.rng_seed``.

    Stages (each skipped when its magnitude is 0): corner cutting toward the
    chord, overshoot past each via key along the incoming direction, a smooth
    lateral excursion vanishing at both ends, and a monotone time warp.
    """
    if len(path) < 2:
        raise InvalidArgument("apply_user_style needs at least 2 points")
    layout = layout or reference_qwerty()
    rng = np.random.default_rng(style.rng_seed)
    pts = np.array(path.points, dtype=np.float64)
    if style.corner_cut > 0:
        pts = _cut_corners(pts, style.corner_cut)
    if style.overshoot_scale > 0:
        try:
            via = word_to_via_points(layout, path.word)
            via_idx = _via_indices(path.points, via)
        except InvalidWord:
            via_idx = np.array([0, len(path) - 1])
        if via_idx[-1] != len(path) - 1:
            via_idx = np.append(via_idx, len(path) - 1)
        pts = _overshoot(pts, via_idx, style.overshoot_scale, rng)
    if style.excursion_amplitude > 0:
        pts = _excursion(pts, style.excursion_amplitude, style.excursion_wavelength, rng)
    if style.speed_warp > 0:
        pts = _speed_warp(pts, style.speed_warp, rng)
    return Path(path.word, pts, Source.USER_STYLE)


def jitter_style(style: StyleParams, seed: int) -> StyleParams:
    """Scale each magnitude by a seeded factor in [0.7, 1.3]; ``rng_seed`` becomes ``seed``."""
    rng = np.random.default_rng(seed)
    f = rng.uniform(1.0 - _STYLE_JITTER, 1.0 + _STYLE_JITTER, size=4)
    return StyleParams(
        overshoot_scale=style.overshoot_scale * f[0],
        excursion_amplitude=style.excursion_amplitude * f[1],
        excursion_wavelength=style.excursion_wavelength,
        corner_cut=min(style.corner_cut * f[2], 0.95),
        speed_warp=style.speed_warp * f[3],
        rng_seed=seed,
    )


def generate_corpus(
    layout: KeyboardLayout,
    lexicon: Sequence[str],
    per_word: int,
    mode: Mode | str,
    style: StyleParams = DEFAULT_USER_STYLE,
    base_seed: int = 0,
    n: int = DEFAULT_LENGTH,
) -> Corpus:
    mode = Mode(mode)
    if not lexicon:
        raise InvalidArgument("lexicon must be non-empty")
    if per_word < 1:
        raise InvalidArgument(f"per_word must be >= 1, got {per_word}")
    for w in lexicon:
        validate_word(layout, w)

    paths = []
    for word in lexicon:
        base = synthesize_spline(layout, word, n)
        for i in range(per_word):
            if mode is Mode.SYNTHETIC:
                paths.append(base)
            else:
                seed = derive_seed(base_seed, word, i)
                paths.append(apply_user_style(base, jitter_style(style, seed), layout))
    metadata = {
        "layout": layout.name,
        "seed": int(base_seed),
        "generator": "spline" if mode is Mode.SYNTHETIC else "user-style-simulator",
        "mode": mode.value,
        "length": n,
        "per_word": per_word,
        "lexicon": list(lexicon),
    }
    if mode is Mode.USER_STYLE:
        metadata["style"] = style.to_dict()
        metadata["note"] = "simulated user idiosyncrasies, not recorded user data"
    return Corpus(tuple(paths), metadata)


def read_lexicon(source) -> list[str]:
    words = []
    for lineno, line in enumerate(FsPath(source).read_text(encoding="utf-8").splitlines(), 1):
        w = line.strip()
        if not w:
            continue
        if w != w.lower():
            raise InvalidWord(f"lexicon line {lineno}: {w!r} is not lowercase")
        words.append(w)
    if not words:
        raise InvalidArgument(f"lexicon {source} is empty")
    if len(set(words)) != len(words):
        raise InvalidArgument(f"lexicon {source} has duplicate words")
    return words
