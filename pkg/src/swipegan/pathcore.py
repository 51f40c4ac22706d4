"""Path data model, arc-length resampling, content distance and corpus JSONL I/O."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import numpy as np

from swipegan._io import atomic_write_text
from swipegan.errors import InvalidArgument, LengthMismatch, ParseError
from swipegan.layout import KeyboardLayout, reference_qwerty, validate_word

DEFAULT_LENGTH = 64
COORD_MIN, COORD_MAX = -0.25, 1.25


class Source(str, Enum):
    USER_STYLE = "user"
    SYNTHETIC = "synthetic"
    GAN = "gan"


@dataclass(frozen=True, eq=False)
class Path:
    """A word label plus an ordered (L, 2) array of points, uniformly spaced in time."""

    word: str
    points: np.ndarray
    source: Source

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidArgument(f"points must have shape (L, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("points must be finite")
        if not self.word:
            raise InvalidArgument("path word must be non-empty")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "source", Source(self.source))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Path):
            return NotImplemented
        return (
            self.word == other.word
            and self.source == other.source
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.word, self.source, self.points.tobytes()))

    def with_points(self, points, source: Source | None = None) -> "Path":
        return Path(self.word, points, self.source if source is None else source)


@dataclass(frozen=True)
class Corpus:
    paths: tuple[Path, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        lexicon = self.metadata.get("lexicon")
        if lexicon is not None:
            allowed = set(lexicon)
            stray = sorted({p.word for p in self.paths} - allowed)
            if stray:
                raise InvalidArgument(f"paths with words outside the corpus lexicon: {stray[:5]}")

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def __getitem__(self, i):
        return self.paths[i]

    @property
    def words(self) -> list[str]:
        return [p.word for p in self.paths]

    def points_array(self) -> np.ndarray:
        """Stack all paths into (N, L, 2); requires equal lengths."""
        lengths = {len(p) for p in self.paths}
        if len(lengths) > 1:
            raise LengthMismatch(f"corpus has mixed path lengths {sorted(lengths)}")
        if not self.paths:
            return np.zeros((0, 0, 2))
        return np.stack([p.points for p in self.paths])


@dataclass(frozen=True)
class StatsRecord:
    arc_length: float
    mean_turning: float
    start_key_distance: float
    end_key_distance: float


def _segment_lengths(pts: np.ndarray) -> np.ndarray:
    return np.hypot(*np.diff(pts, axis=0).T)


def arc_length(points: np.ndarray) -> float:
    return float(_segment_lengths(np.asarray(points)).sum())


def resample_points(pts: np.ndarray, n: int) -> np.ndarray:
    """``n`` points uniformly spaced by cumulative arc length along the polyline ``pts``."""
    if n < 2:
        raise InvalidArgument(f"resample needs n >= 2, got {n}")
    pts = np.asarray(pts, dtype=np.float64)
    if pts.shape[0] < 2:
        raise InvalidArgument("resample needs a path with at least 2 points")
    seg = _segment_lengths(pts)
    keep = np.concatenate([[True], seg > 0])
    pts_u, seg = pts[keep], seg[seg > 0]
    if seg.size == 0:
        return np.repeat(pts[:1], n, axis=0)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n)
    out = np.column_stack([np.interp(targets, s, pts_u[:, 0]), np.interp(targets, s, pts_u[:, 1])])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def resample(path: Path, n: int = DEFAULT_LENGTH) -> Path:
    return path.with_points(resample_points(path.points, n))


def path_distance(x: Path | np.ndarray, y: Path | np.ndarray) -> float:
    """Mean squared pointwise Euclidean distance between two equal-length paths."""
    a = x.points if isinstance(x, Path) else np.asarray(x, dtype=np.float64)
    b = y.points if isinstance(y, Path) else np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"path lengths differ: {a.shape[0]} vs {b.shape[0]}")
    return float(np.mean(np.sum((a - b) ** 2, axis=-1)))


def turning_angles(pts: np.ndarray) -> np.ndarray:
    """Signed turning angle at each interior point; zero-length steps count as no turn."""
    d = np.diff(np.asarray(pts, dtype=np.float64), axis=0)
    a, b = d[:-1], d[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.sum(a * b, axis=1)
    return np.arctan2(cross, dot)


def path_stats(path: Path, layout: KeyboardLayout | None = None) -> StatsRecord:
    if len(path) < 2:
        raise InvalidArgument("path_stats needs at least 2 points")
    layout = layout or reference_qwerty()
    pts = path.points
    turns = turning_angles(pts)
    mean_turn = float(np.mean(np.abs(turns))) if turns.size else 0.0
    start_d = end_d = math.nan
    if all(c in layout.keys for c in path.word):
        start_d = float(np.hypot(*(pts[0] - layout.keys[path.word[0]].center)))
        end_d = float(np.hypot(*(pts[-1] - layout.keys[path.word[-1]].center)))
    return StatsRecord(arc_length(pts), mean_turn, start_d, end_d)


def corpus_stats(paths: Iterable[Path]) -> dict[str, float]:
    """Mean arc length and mean |turning angle| over a collection of paths."""
    recs = [path_stats(p) for p in paths]
    return {
        "arc_length": float(np.mean([r.arc_length for r in recs])),
        "mean_turning": float(np.mean([r.mean_turning for r in recs])),
    }


# -- corpus JSONL ---------------------------------------------------------


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=False, separators=(", ", ": "), allow_nan=False)


def _check_range(pts: np.ndarray) -> bool:
    return bool(np.all((pts >= COORD_MIN) & (pts <= COORD_MAX)))


def corpus_to_text(corpus: Corpus) -> str:
    buf = io.StringIO()
    buf.write(json.dumps(corpus.metadata, sort_keys=True, allow_nan=False) + "\n")
    for i, p in enumerate(corpus.paths):
        if len(p) < 2:
            raise InvalidArgument(f"path {i} has fewer than 2 points")
        if not _check_range(p.points):
            raise InvalidArgument(f"path {i} ({p.word!r}) leaves the stored coordinate range")
        rec = {"word": p.word, "source": p.source.value, "points": p.points.tolist()}
        buf.write(_dump_line(rec) + "\n")
    return buf.getvalue()


def corpus_write(corpus: Corpus, destination) -> None:
    atomic_write_text(destination, corpus_to_text(corpus))


def corpus_from_lines(lines: Sequence[str]) -> Corpus:
    if not lines or not lines[0].strip():
        raise ParseError("missing metadata header", 1)
    try:
        metadata = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"metadata is not valid JSON ({exc.msg})", 1) from exc
    if not isinstance(metadata, dict):
        raise ParseError("metadata header must be a JSON object", 1)
    paths = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
        if not isinstance(rec, dict):
            raise ParseError("record must be a JSON object", lineno)
        for key in ("word", "source", "points"):
            if key not in rec:
                raise ParseError(f"record missing {key!r} field", lineno)
        try:
            source = Source(rec["source"])
        except ValueError:
            raise ParseError(f"unknown source {rec['source']!r}", lineno) from None
        try:
            pts = np.array(rec["points"], dtype=np.float64)
        except (TypeError, ValueError):
            raise ParseError("points must be a list of [x, y] pairs", lineno) from None
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ParseError(f"points must be >= 2 [x, y] pairs, got shape {pts.shape}", lineno)
        if not np.all(np.isfinite(pts)) or not _check_range(pts):
            raise ParseError("coordinates must be finite and within the stored range", lineno)
        if not isinstance(rec["word"], str) or not rec["word"]:
            raise ParseError("word must be a non-empty string", lineno)
        paths.append(Path(rec["word"], pts, source))
    try:
        return Corpus(tuple(paths), metadata)
    except InvalidArgument as exc:
        raise ParseError(str(exc)) from exc


def corpus_read(source) -> Corpus:
    text = FsPath(source).read_text(encoding="utf-8")
    return corpus_from_lines(text.splitlines())


def validate_corpus_words(corpus: Corpus, layout: KeyboardLayout) -> None:
    for w in sorted(set(corpus.words)):
        validate_word(layout, w)
