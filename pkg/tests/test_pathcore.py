import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swipegan.errors import InvalidArgument, LengthMismatch, ParseError
from swipegan.pathcore import (
    Corpus,
    Path,
    Source,
    arc_length,
    corpus_read,
    corpus_to_text,
    corpus_write,
    path_distance,
    path_stats,
    resample,
)


def mk(points, word="go", source=Source.SYNTHETIC):
    return Path(word, np.asarray(points, dtype=float), source)


def test_resample_segment_midpoint():
    out = resample(mk([(0, 0), (1, 0)]), 3)
    assert np.allclose(out.points, [(0, 0), (0.5, 0), (1, 0)], atol=1e-15)
    assert out.word == "go" and out.source is Source.SYNTHETIC


def test_resample_l_shape_corner():
    out = resample(mk([(0, 0), (0, 1), (1, 1)]), 3)
    assert np.allclose(out.points, [(0, 0), (0, 1), (1, 1)], atol=1e-12)


def test_resample_idempotent_on_uniform_polyline():
    t = np.linspace(0, 1, 17)
    pts = np.column_stack([t, 0.3 * t])
    out = resample(mk(pts), 17)
    assert np.max(np.abs(out.points - pts)) < 1e-12


def test_resample_endpoints_exact_and_bad_n():
    p = mk([(0.1, 0.2), (0.4, 0.9), (0.7, 0.3)])
    out = resample(p, 50)
    assert np.array_equal(out.points[0], p.points[0]) and np.array_equal(out.points[-1], p.points[-1])
    with pytest.raises(InvalidArgument):
        resample(p, 1)


@settings(max_examples=40, deadline=None)
@given(
    radius=st.floats(5.0, 50.0),
    n=st.integers(64, 256),
)
def test_resample_preserves_arc_length_on_smooth_paths(radius, n):
    # unit-length arc of curvature 1/radius, densely sampled; the chord error
    # of the resampled polyline scales like (spacing / radius)**2 / 24
    theta = np.linspace(0, 1.0 / radius, 4000)
    pts = 0.3 + radius * np.column_stack([1 - np.cos(theta), np.sin(theta)])
    src = mk(pts)
    out = resample(src, n)
    assert abs(arc_length(out.points) - arc_length(src.points)) / arc_length(src.points) < 1e-6


def test_distance_examples():
    x = mk([(0.1, 0.1), (0.2, 0.3), (0.5, 0.5)])
    assert path_distance(x, x) == 0.0
    assert path_distance(x, mk(x.points + [0.1, 0.0])) == pytest.approx(0.01, abs=1e-15)
    with pytest.raises(LengthMismatch):
        path_distance(x, mk(np.zeros((4, 2))))


def test_distance_increases_with_translation():
    x = mk(np.random.default_rng(0).uniform(0, 1, (8, 2)))
    vals = [path_distance(x, mk(x.points + [s, -s / 2])) for s in (0.0, 0.01, 0.02, 0.05)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_sqrt_distance_is_pseudometric(seed):
    r = np.random.default_rng(seed)
    a, b, c = (mk(r.uniform(-0.2, 1.2, (6, 2))) for _ in range(3))
    d = lambda p, q: math.sqrt(path_distance(p, q))  # noqa: E731
    assert d(a, b) >= 0 and d(a, a) == 0
    assert d(a, b) == d(b, a)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


def test_stats_examples():
    assert path_stats(mk([(0, 0), (1, 0)])).arc_length == 1.0
    assert path_stats(mk([(0, 0), (1, 0), (2, 0)])).mean_turning == 0.0
    assert path_stats(mk([(0, 0), (1, 0), (1, 1)])).mean_turning == pytest.approx(math.pi / 2)


def test_stats_needs_two_points():
    with pytest.raises(InvalidArgument):
        path_stats(mk([(0.5, 0.5)]))


def test_stats_key_distances(layout):
    g, o = layout.keys["g"].center, layout.keys["o"].center
    rec = path_stats(mk([g, (0.6, 0.4), (o[0] + 0.03, o[1] + 0.04)]), layout)
    assert rec.start_key_distance == 0.0
    assert rec.end_key_distance == pytest.approx(0.05)
    assert all(math.isfinite(v) for v in (rec.arc_length, rec.mean_turning))


def _corpus(n=2):
    r = np.random.default_rng(7)
    paths = tuple(mk(r.uniform(0, 1, (5, 2)), w, s) for w, s in zip(["go", "to", "go"][:n], [Source.USER_STYLE, Source.GAN, Source.SYNTHETIC]))
    return Corpus(paths, {"layout": "qwerty-ref", "seed": 3, "generator": "test", "lexicon": ["go", "to"]})


def test_corpus_roundtrip(tmp_path):
    for c in (Corpus((), {"layout": "qwerty-ref", "seed": 1, "generator": "x"}), _corpus(1), _corpus(2)):
        dest = tmp_path / "c.jsonl"
        corpus_write(c, dest)
        lines = dest.read_text().splitlines()
        assert len(lines) == 1 + len(c)
        back = corpus_read(dest)
        assert back.metadata == c.metadata
        assert list(back.paths) == list(c.paths)


def test_corpus_bytes_stable(tmp_path):
    c = _corpus(2)
    corpus_write(c, tmp_path / "a.jsonl")
    corpus_write(corpus_read(tmp_path / "a.jsonl"), tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_corpus_record_format():
    line = corpus_to_text(_corpus(1)).splitlines()[1]
    import json

    rec = json.loads(line)
    assert list(rec) == ["word", "source", "points"]
    assert rec["source"] == "user"


def test_corpus_parse_error_names_line(tmp_path):
    text = corpus_to_text(_corpus(2)).splitlines()
    text[2] = text[2].replace('"word": "to", ', "")
    (tmp_path / "bad.jsonl").write_text("\n".join(text) + "\n")
    with pytest.raises(ParseError, match="line 3") as exc:
        corpus_read(tmp_path / "bad.jsonl")
    assert exc.value.line == 3


def test_corpus_rejects_words_outside_lexicon():
    with pytest.raises(InvalidArgument):
        Corpus((mk([(0, 0), (1, 1)], "xyz"),), {"lexicon": ["go"]})
