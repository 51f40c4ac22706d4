"""Recognizer training, Top-1 evaluation, composition studies and learning-curve slopes."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Mapping, Sequence

import numpy as np

from swipegan import nn
from swipegan._io import atomic_write_text
from swipegan.ctc import DEFAULT_ALPHABET, CtcAlphabet, lexicon_scores, min_alignment_length, pick_top1
from swipegan.errors import InvalidArgument, ParseError
from swipegan.gan import Classifier, EpochSampler, classifier_step
from swipegan.pathcore import Corpus, Path, Source
from swipegan.synth import derive_seed

SOURCE_KEYS = {"U": Source.USER_STYLE, "S": Source.SYNTHETIC, "G": Source.GAN}


@dataclass
class RecognizerConfig:
    hidden: int = 64
    depth: int = 2
    epochs: float = 20.0
    batch: int = 16
    lr: float = 1e-3
    clip_norm: float | None = 5.0
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> "RecognizerConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidArgument(f"unknown recognizer config keys: {sorted(unknown)}")
        return cls(**data)

    def steps_for(self, n_paths: int) -> int:
        """Optimizer steps for a fixed number of epochs over ``n_paths``."""
        return int(math.ceil(n_paths * self.epochs / self.batch))


@dataclass
class TrainingReport:
    steps: int
    skipped: int
    losses: list[float] = field(default_factory=list)


def new_recognizer(config: RecognizerConfig, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> Classifier:
    rng = np.random.default_rng(derive_seed(config.seed, "recognizer-init", 0))
    return Classifier(config.hidden, config.depth, rng, alphabet)


def train_recognizer(
    corpus: Corpus | Sequence[Path],
    lexicon: Sequence[str],
    config: RecognizerConfig | None = None,
    progress=None,
) -> tuple[Classifier, TrainingReport]:
    """Train a fresh CTC recognizer for ``config.epochs`` passes over ``corpus``."""
    config = config or RecognizerConfig()
    paths = list(corpus)
    if not paths:
        raise InvalidArgument("training corpus is empty")
    allowed = set(lexicon)
    stray = sorted({p.word for p in paths} - allowed)
    if stray:
        raise InvalidArgument(f"training words outside the lexicon: {stray[:5]}")
    clf = new_recognizer(config)
    L = len(paths[0])
    usable = [p for p in paths if min_alignment_length(p.word) <= L]
    report = TrainingReport(steps=config.steps_for(len(usable)), skipped=len(paths) - len(usable))
    if not usable or report.steps == 0:
        return clf, report
    state = nn.AdamState()
    sampler = EpochSampler(len(usable), config.batch, np.random.default_rng(derive_seed(config.seed, "recognizer", 0)))
    for step in range(report.steps):
        batch = [usable[i] for i in sampler.next()]
        loss, skipped = classifier_step(clf, state, batch, config.lr, config.clip_norm)
        report.losses.append(loss)
        report.skipped += skipped
        if progress is not None:
            progress(step + 1, loss)
    return clf, report


def predict_top1(classifier, paths: Sequence[Path], lexicon: Sequence[str], batch: int = 128) -> list[str]:
    """Lexicon-constrained Top-1 word per path (no language model)."""
    out: list[str] = []
    alphabet = getattr(classifier, "alphabet", DEFAULT_ALPHABET)
    for i in range(0, len(paths), batch):
        pts = np.stack([p.points for p in paths[i : i + batch]])
        logp = classifier.log_probs(pts)
        out.extend(pick_top1(lexicon_scores(logp, lexicon, alphabet), lexicon))
    return out


def evaluate_top1(classifier, test_corpus: Corpus | Sequence[Path], lexicon: Sequence[str]) -> float:
    paths = list(test_corpus)
    if not paths:
        raise InvalidArgument("test corpus is empty")
    predictions = predict_top1(classifier, paths, lexicon)
    return float(np.mean([pred == p.word for pred, p in zip(predictions, paths)]))


# -- compositions ----------------------------------------------------------


@dataclass(frozen=True)
class CompositionSpec:
    """A training mixture such as ``CompositionSpec("U1+G5", {"U": 300, "G": 1500})``."""

    label: str
    counts: Mapping[str, int]

    def __post_init__(self):
        bad = set(self.counts) - set(SOURCE_KEYS)
        if bad:
            raise InvalidArgument(f"{self.label}: unknown corpus keys {sorted(bad)} (use U, S, G)")
        if any(int(v) < 0 for v in self.counts.values()):
            raise InvalidArgument(f"{self.label}: counts must be non-negative")
        if sum(self.counts.values()) == 0:
            raise InvalidArgument(f"{self.label}: empty composition")

    @classmethod
    def from_dict(cls, data: dict) -> "CompositionSpec":
        if "label" not in data:
            raise InvalidArgument(f"composition entry without a label: {data}")
        return cls(str(data["label"]), {k: int(v) for k, v in data.items() if k != "label"})


@dataclass
class CompositionResult:
    label: str
    n_user: int
    n_synth: int
    n_gan: int
    top1: float
    steps: int
    seed: int
    runtime: float


@dataclass
class ExperimentReport:
    rows: list[CompositionResult]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "n_user", "n_synth", "n_gan", "top1"])
        for r in self.rows:
            w.writerow([r.label, r.n_user, r.n_synth, r.n_gan, f"{r.top1:.6f}"])
        return buf.getvalue()

    def to_table(self) -> str:
        header = ("composition", "user", "synth", "gan", "top-1")
        body = [(r.label, str(r.n_user), str(r.n_synth), str(r.n_gan), f"{100 * r.top1:.1f}%") for r in self.rows]
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
        fmt = lambda row: "  ".join(c.ljust(wd) if i == 0 else c.rjust(wd) for i, (c, wd) in enumerate(zip(row, widths)))  # noqa: E731
        lines = [fmt(header), "  ".join("-" * wd for wd in widths)] + [fmt(row) for row in body]
        return "\n".join(lines) + "\n"


def balanced_subset(paths: Sequence[Path], n: int) -> list[Path]:
    """First ``n`` paths taken round-robin across words, so every word gets an equal share."""
    if n > len(paths):
        raise InvalidArgument(f"requested {n} paths but only {len(paths)} are available")
    by_word: dict[str, list[Path]] = {}
    for p in paths:
        by_word.setdefault(p.word, []).append(p)
    out: list[Path] = []
    rank = 0
    while len(out) < n:
        for group in by_word.values():
            if rank < len(group) and len(out) < n:
                out.append(group[rank])
        rank += 1
    return out


def assert_disjoint(train: Sequence[Path], test: Sequence[Path]) -> None:
    """Raise if any test path's points are bitwise equal to a training path's."""
    seen = {p.points.tobytes() for p in train}
    clash = [i for i, p in enumerate(test) if p.points.tobytes() in seen]
    if clash:
        raise InvalidArgument(f"{len(clash)} test paths also occur in the training data (first index {clash[0]})")


def run_compositions(
    specs: Sequence[CompositionSpec],
    corpora: Mapping[str, Corpus | Sequence[Path]],
    test_corpus: Corpus | Sequence[Path],
    lexicon: Sequence[str],
    config: RecognizerConfig | None = None,
    progress=None,
) -> ExperimentReport:
    """Train one recognizer per composition (identical settings) and score each on the test set."""
    config = config or RecognizerConfig()
    labels = [s.label for s in specs]
    if len(set(labels)) != len(labels):
        dup = sorted({x for x in labels if labels.count(x) > 1})
        raise InvalidArgument(f"duplicate composition labels: {dup}")
    test = list(test_corpus)
    rows = []
    for spec in specs:
        start = time.perf_counter()
        train: list[Path] = []
        for key in ("U", "S", "G"):
            n = int(spec.counts.get(key, 0))
            if n:
                if key not in corpora:
                    raise InvalidArgument(f"{spec.label} needs a {key} corpus")
                train.extend(balanced_subset(list(corpora[key]), n))
        assert_disjoint(train, test)
        clf, rep = train_recognizer(train, lexicon, config)
        acc = evaluate_top1(clf, test, lexicon)
        rows.append(
            CompositionResult(
                spec.label,
                int(spec.counts.get("U", 0)),
                int(spec.counts.get("S", 0)),
                int(spec.counts.get("G", 0)),
                acc,
                rep.steps,
                config.seed,
                time.perf_counter() - start,
            )
        )
        if progress is not None:
            progress(rows[-1])
    return ExperimentReport(rows)


# -- learning curves -------------------------------------------------------


def learning_curve_slope(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(training-set size)."""
    pts = list(points)
    if len(pts) < 2:
        raise InvalidArgument("need at least two (size, error) points")
    sizes = np.array([float(p[0]) for p in pts])
    errors = np.array([float(p[1]) for p in pts])
    if np.any(sizes <= 0) or np.any(errors <= 0):
        raise InvalidArgument("sizes and error rates must be positive")
    lx, ly = np.log(sizes), np.log(errors)
    dx = lx - lx.mean()
    denom = float(np.sum(dx * dx))
    if denom == 0:
        raise InvalidArgument("all training sizes are equal; slope undefined")
    return float(np.sum(dx * (ly - ly.mean())) / denom)


def read_curve_csv(source) -> dict[str, list[tuple[float, float]]]:
    """Read ``train_size,error[,series]`` rows (header required) grouped by series."""
    text = FsPath(source).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"train_size", "error"} <= set(reader.fieldnames):
        raise ParseError("curve CSV needs a header with train_size and error columns", 1)
    series: dict[str, list[tuple[float, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            size, err = float(row["train_size"]), float(row["error"])
        except (TypeError, ValueError):
            raise ParseError("train_size and error must be numbers", lineno) from None
        series.setdefault(row.get("series") or "all", []).append((size, err))
    if not series:
        raise ParseError("curve CSV has no data rows")
    return series


def curve_csv(series: Mapping[str, Sequence[tuple[float, float]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "train_size", "error"])
    for name, pts in series.items():
        for size, err in pts:
            w.writerow([name, repr(float(size)), repr(float(err))])
    return buf.getvalue()


def report_curve_points(report: ExperimentReport) -> dict[str, list[tuple[float, float]]]:
    """Split a composition report into a user-only series and a GAN-augmented series.

    Rows with only U data go to ``"user"``; rows mixing U and G (no S) go to
    ``"gan"``. Error rate is ``1 - top1``; zero errors are dropped since the
    slope is fitted in log space.
    """
    out: dict[str, list[tuple[float, float]]] = {"user": [], "gan": []}
    for r in report.rows:
        err = 1.0 - r.top1
        if err <= 0:
            continue
        size = r.n_user + r.n_synth + r.n_gan
        if r.n_user and not r.n_synth and not r.n_gan:
            out["user"].append((size, err))
        elif r.n_gan and not r.n_synth:
            out["gan"].append((size, err))
    return {k: v for k, v in out.items() if v}


def save_report(report: ExperimentReport, dest) -> None:
    atomic_write_text(dest, report.to_csv())


# -- recognizer checkpoints --------------------------------------------------


def recognizer_to_json(classifier: Classifier, config: RecognizerConfig) -> str:
    extra = {
        "kind": "recognizer",
        "alphabet": classifier.alphabet.characters,
        "config": dataclasses.asdict(config),
    }
    return nn.params_to_json(classifier.params, extra)


def recognizer_from_json(text: str) -> tuple[Classifier, RecognizerConfig]:
    _, rest = nn.params_from_json(text)
    if rest.get("kind") != "recognizer":
        raise ParseError("checkpoint does not hold a recognizer")
    config = RecognizerConfig.from_dict(rest.get("config", {}))
    clf = new_recognizer(config, CtcAlphabet(rest.get("alphabet", DEFAULT_ALPHABET.characters)))
    params, _ = nn.params_from_json(text, clf.shapes())
    clf.params = params
    return clf, config


def save_recognizer(classifier: Classifier, config: RecognizerConfig, dest) -> None:
    atomic_write_text(dest, recognizer_to_json(classifier, config))


def load_recognizer(source) -> tuple[Classifier, RecognizerConfig]:
    return recognizer_from_json(FsPath(source).read_text(encoding="utf-8"))
