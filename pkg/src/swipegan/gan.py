"""Multi-task adversarial path style transfer.

Three networks share one input encoding of a path (normalized coordinates
plus scaled per-step displacement, fed to a stacked bi-LSTM):

* ``Generator``: per-step 2-D displacement, temporally smoothed, added to the
  input path (``Y = X + delta``). A zero head makes it the identity.
* ``Discriminator``: mean-pooled bi-LSTM states -> dense -> sigmoid.
* ``Classifier``: per-step softmax over letters + blank, scored with CTC.

Training alternates one discriminator ascent step with one joint
generator/classifier descent step on ``lam * K_gen + (1 - lam) * L_ctc``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from swipegan import nn
from swipegan._io import atomic_write_text
from swipegan.ctc import DEFAULT_ALPHABET, CtcAlphabet, ctc_forward_backward
from swipegan.errors import InvalidArgument, LengthMismatch, ParseError
from swipegan.pathcore import COORD_MAX, COORD_MIN, DEFAULT_LENGTH, Corpus, Path, Source
from swipegan.synth import derive_seed

_PROB_CLAMP = 1e-12


def softplus(x):
    return np.logaddexp(0.0, x)


# -- shared input encoding -------------------------------------------------


def delta_scale(length: int) -> float:
    return max(1.0, (length - 1) / 4.0)


def path_features(points: np.ndarray) -> np.ndarray:
    """(B, L, 2) points -> (L, B, 4) features: centered coords and scaled step displacement."""
    B, L, _ = points.shape
    s = delta_scale(L)
    pts = np.transpose(points, (1, 0, 2))
    feats = np.zeros((L, B, 4))
    feats[:, :, :2] = 2.0 * pts - 1.0
    feats[1:, :, 2:] = s * (pts[1:] - pts[:-1])
    return feats


def path_features_backward(dfeats: np.ndarray) -> np.ndarray:
    L = dfeats.shape[0]
    s = delta_scale(L)
    d = 2.0 * dfeats[:, :, :2]
    step = s * dfeats[1:, :, 2:]
    d[1:] += step
    d[:-1] -= step
    return np.transpose(d, (1, 0, 2))


def _check_points(points, what: str = "points") -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 3 or points.shape[2] != 2:
        raise InvalidArgument(f"{what} must have shape (B, L, 2), got {points.shape}")
    return points


class _Network:
    """Parameter bundle + forward-call counter (used to verify which nets a step touches)."""

    kind = "network"

    def __init__(self):
        self.params: nn.Params = {}
        self.n_forward = 0

    def shapes(self) -> dict[str, tuple]:
        return {k: v.shape for k, v in self.params.items()}


class Generator(_Network):
    kind = "generator"

    def __init__(self, hidden: int, depth: int, noise_dim: int, smooth_sigma: float, rng, zero_head: bool = True):
        super().__init__()
        self.noise_dim = noise_dim
        self.smooth_sigma = smooth_sigma
        self.params = nn.init_bilstm_stack(rng, 4 + noise_dim, hidden, depth, "enc.")
        self.params.update(nn.init_dense(rng, 2 * hidden, 2, "head.", scale=0.1))
        if zero_head:
            self.params["head.W"][:] = 0.0
        self._kernels: dict[int, np.ndarray] = {}

    def smoothing(self, L: int) -> np.ndarray:
        K = self._kernels.get(L)
        if K is None:
            if self.smooth_sigma <= 0:
                K = np.eye(L)
            else:
                t = np.arange(L)
                K = np.exp(-0.5 * ((t[:, None] - t[None, :]) / self.smooth_sigma) ** 2)
                K /= K.sum(axis=1, keepdims=True)
            self._kernels[L] = K
        return K

    def forward(self, points, noise):
        self.n_forward += 1
        points = _check_points(points)
        B, L, _ = points.shape
        noise = np.asarray(noise, dtype=np.float64).reshape(B, L, self.noise_dim)
        x = np.concatenate([path_features(points), np.transpose(noise, (1, 0, 2))], axis=2)
        hs, enc_cache = nn.stack_forward(self.params, x, "enc.")
        raw = nn.dense_forward(self.params, hs, "head.")
        K = self.smoothing(L)
        disp = np.einsum("ts,sbd->tbd", K, raw)
        y = points + np.transpose(disp, (1, 0, 2))
        return y, (hs, enc_cache, K)

    def backward(self, cache, dy):
        hs, enc_cache, K = cache
        ddisp = np.transpose(dy, (1, 0, 2))
        draw = np.einsum("ts,tbd->sbd", K, ddisp)
        grads, dhs = nn.dense_backward(self.params, hs, draw, "head.")
        g_enc, _ = nn.stack_backward(self.params, enc_cache, dhs, "enc.")
        grads.update(g_enc)
        return grads


class Discriminator(_Network):
    kind = "discriminator"

    def __init__(self, hidden: int, depth: int, rng):
        super().__init__()
        self.params = nn.init_bilstm_stack(rng, 4, hidden, depth, "enc.")
        self.params.update(nn.init_dense(rng, 2 * hidden, 1, "head."))

    def forward(self, points):
        """Logits of P(path is user-generated), shape (B,)."""
        self.n_forward += 1
        points = _check_points(points)
        hs, enc_cache = nn.stack_forward(self.params, path_features(points), "enc.")
        pooled = nn.mean_pool(hs)
        logit = nn.dense_forward(self.params, pooled, "head.")[:, 0]
        return logit, (hs, enc_cache, pooled)

    def backward(self, cache, dlogit):
        hs, enc_cache, pooled = cache
        grads, dpooled = nn.dense_backward(self.params, pooled, dlogit[:, None], "head.")
        dhs = np.broadcast_to(dpooled / hs.shape[0], hs.shape)
        g_enc, dfeats = nn.stack_backward(self.params, enc_cache, np.ascontiguousarray(dhs), "enc.")
        grads.update(g_enc)
        return grads, path_features_backward(dfeats)

    def prob(self, points) -> np.ndarray:
        return nn.sigmoid(self.forward(points)[0])


class Classifier(_Network):
    kind = "classifier"

    def __init__(self, hidden: int, depth: int, rng, alphabet: CtcAlphabet = DEFAULT_ALPHABET):
        super().__init__()
        self.alphabet = alphabet
        self.params = nn.init_bilstm_stack(rng, 4, hidden, depth, "enc.")
        self.params.update(nn.init_dense(rng, 2 * hidden, len(alphabet), "head."))

    def forward(self, points):
        """Per-step log-probabilities over letters + blank, shape (B, L, C)."""
        self.n_forward += 1
        points = _check_points(points)
        hs, enc_cache = nn.stack_forward(self.params, path_features(points), "enc.")
        logits = nn.dense_forward(self.params, hs, "head.")
        logp = nn.log_softmax(logits, axis=-1)
        return np.transpose(logp, (1, 0, 2)), (hs, enc_cache)

    def backward(self, cache, dlogits):
        hs, enc_cache = cache
        dl = np.transpose(dlogits, (1, 0, 2))
        grads, dhs = nn.dense_backward(self.params, hs, dl, "head.")
        g_enc, dfeats = nn.stack_backward(self.params, enc_cache, dhs, "enc.")
        grads.update(g_enc)
        return grads, path_features_backward(dfeats)

    def log_probs(self, points, batch: int = 256) -> np.ndarray:
        points = _check_points(points)
        out = [self.forward(points[i : i + batch])[0] for i in range(0, points.shape[0], batch)]
        return np.concatenate(out, axis=0) if out else np.zeros((0,) + points.shape[1:2] + (len(self.alphabet),))

    def ctc(self, points, words: Sequence[str]):
        """Mean CTC loss over feasible paths, with parameter and input gradients.

        Returns ``(loss, grads, dpoints, n_skipped)``.
        """
        logp, cache = self.forward(points)
        targets = [self.alphabet.encode(w) for w in words]
        losses, dlogits = ctc_forward_backward(logp, targets, self.alphabet.blank)
        ok = np.isfinite(losses)
        n_ok = int(ok.sum())
        if n_ok == 0:
            zero = {k: np.zeros_like(v) for k, v in self.params.items()}
            return math.nan, zero, np.zeros_like(np.asarray(points)), len(words)
        dlogits = dlogits / n_ok
        grads, dpoints = self.backward(cache, dlogits)
        return float(losses[ok].mean()), grads, dpoints, len(words) - n_ok


# -- objectives ------------------------------------------------------------


def compute_gan_cost(d_p, d_y, delta) -> float:
    """Literal minimax cost: E[log D(P)] + E[log(1 - D(G(X)))] + E[Delta(X, G(X))].

    Arguments may be scalars or per-sample arrays (expectations become means).
    Probabilities at 0 or 1 are clamped to [1e-12, 1 - 1e-12] with a warning.
    """
    d_p = np.asarray(d_p, dtype=np.float64)
    d_y = np.asarray(d_y, dtype=np.float64)
    lo, hi = _PROB_CLAMP, 1.0 - _PROB_CLAMP
    if np.any((d_p < lo) | (d_p > hi) | (d_y < lo) | (d_y > hi)):
        warnings.warn("discriminator probability clamped to [1e-12, 1-1e-12]", RuntimeWarning, stacklevel=2)
        d_p, d_y = np.clip(d_p, lo, hi), np.clip(d_y, lo, hi)
    return float(np.mean(np.log(d_p)) + np.mean(np.log1p(-d_y)) + np.mean(delta))


def combined_loss(gan_cost: float, ctc_loss: float, lam: float) -> float:
    """``lam * gan_cost + (1 - lam) * ctc_loss``; the unused term is skipped at the endpoints."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidArgument(f"lambda must lie in [0, 1], got {lam}")
    if lam == 1.0:
        return float(gan_cost)
    if lam == 0.0:
        return float(ctc_loss)
    return lam * gan_cost + (1.0 - lam) * ctc_loss


def batch_delta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-path mean squared pointwise distance, shape (B,)."""
    return np.mean(np.sum((y - x) ** 2, axis=-1), axis=-1)


# -- model -----------------------------------------------------------------


@dataclass
class GanConfig:
    length: int = DEFAULT_LENGTH
    hidden: int = 64
    depth: int = 2
    noise_dim: int = 4
    smooth_sigma: float = 2.0
    lam: float = 0.5
    lr: float = 1e-3
    lr_d: float | None = None
    lr_g: float | None = None
    lr_c: float | None = None
    batch: int = 16
    iterations: int = 2000
    pretrain_steps: int = 300
    literal_minimax: bool = False
    clip_norm: float | None = 5.0
    checkpoint_every: int = 0
    seed: int = 0
    # fraction of the run after which all learning rates fall linearly to zero;
    # 1.0 keeps them constant
    lr_decay_start: float = 1.0
    # weight of the mode-seeking term that keeps outputs for one input diverse
    # across noise draws; 0 disables it
    diversity_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidArgument(f"lambda must lie in [0, 1], got {self.lam}")
        if self.length < 2:
            raise InvalidArgument("length must be >= 2")
        if self.batch < 1 or self.hidden < 1 or self.depth < 1:
            raise InvalidArgument("batch, hidden and depth must be positive")
        if self.diversity_weight < 0:
            raise InvalidArgument("diversity_weight must be >= 0")
        if not 0.0 <= self.lr_decay_start <= 1.0:
            raise InvalidArgument(f"lr_decay_start must lie in [0, 1], got {self.lr_decay_start}")

    @classmethod
    def from_dict(cls, data: dict) -> "GanConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidArgument(f"unknown GAN config keys: {sorted(unknown)}")
        return cls(**data)

    def learning_rates(self) -> tuple[float, float, float]:
        pick = lambda v: self.lr if v is None else v  # noqa: E731
        return pick(self.lr_d), pick(self.lr_g), pick(self.lr_c)

    def lr_scale(self, step: int, iterations: int) -> float:
        """Multiplier for 1-based ``step``: 1 until the decay start, then linear down to 1/n at the end."""
        start = int(math.floor(self.lr_decay_start * iterations))
        if step <= start or start >= iterations:
            return 1.0
        return (iterations - step + 1) / (iterations - start)


@dataclass
class StepReport:
    d_loss: float
    g_loss: float
    ctc_loss: float
    delta_mean: float
    gan_cost: float = math.nan
    skipped: int = 0


class GanModel:
    def __init__(self, config: GanConfig | None = None, alphabet: CtcAlphabet = DEFAULT_ALPHABET):
        self.config = config or GanConfig()
        c = self.config
        rng = np.random.default_rng(derive_seed(c.seed, "init", 0))
        self.generator = Generator(c.hidden, c.depth, c.noise_dim, c.smooth_sigma, rng)
        self.discriminator = Discriminator(c.hidden, c.depth, rng)
        self.classifier = Classifier(c.hidden, c.depth, rng, alphabet)
        self.rng = np.random.default_rng(derive_seed(c.seed, "train", 0))
        self.opt = {"generator": nn.AdamState(), "discriminator": nn.AdamState(), "classifier": nn.AdamState()}

    @property
    def lam(self) -> float:
        return self.config.lam

    def networks(self) -> dict[str, _Network]:
        return {"generator": self.generator, "discriminator": self.discriminator, "classifier": self.classifier}

    def all_params(self) -> nn.Params:
        return {f"{name}/{k}": v for name, net in self.networks().items() for k, v in net.params.items()}

    def to_json(self) -> str:
        return nn.params_to_json(
            self.all_params(),
            {"kind": "gan", "lambda": self.config.lam, "config": dataclasses.asdict(self.config)},
        )

    @classmethod
    def from_json(cls, text: str) -> "GanModel":
        _, rest = nn.params_from_json(text)
        if rest.get("kind") != "gan":
            raise ParseError("checkpoint does not hold a GAN model")
        model = cls(GanConfig.from_dict(rest.get("config", {})))
        params, _ = nn.params_from_json(text, {k: v.shape for k, v in model.all_params().items()})
        for name, net in model.networks().items():
            for k in net.params:
                net.params[k] = params[f"{name}/{k}"]
        return model

    def save(self, dest) -> None:
        atomic_write_text(dest, self.to_json())

    @classmethod
    def load(cls, source) -> "GanModel":
        return cls.from_json(FsPath(source).read_text(encoding="utf-8"))


# -- inference -------------------------------------------------------------


def _noise_for(seed: int, word: str, index: int, length: int, noise_dim: int) -> np.ndarray:
    return np.random.default_rng(derive_seed(seed, word, index)).standard_normal((length, noise_dim))


def transfer_points(model: GanModel, points: np.ndarray, noise: np.ndarray) -> np.ndarray:
    y, _ = model.generator.forward(points, noise)
    return np.clip(y, COORD_MIN, COORD_MAX)


def transfer(model: GanModel, path: Path, seed: int = 0, index: int = 0) -> Path:
    """Style-transfer one path; the generator noise is derived from (seed, word, index)."""
    L = model.config.length
    if len(path) != L:
        raise LengthMismatch(f"path has {len(path)} points, model expects {L}")
    noise = _noise_for(seed, path.word, index, L, model.config.noise_dim)
    y = transfer_points(model, path.points[None], noise[None])[0]
    return Path(path.word, y, Source.GAN)


def transfer_corpus(model: GanModel, corpus: Corpus, seed: int = 0, batch: int = 256) -> Corpus:
    L = model.config.length
    for i, p in enumerate(corpus.paths):
        if len(p) != L:
            raise LengthMismatch(f"path {i} has {len(p)} points, model expects {L}")
    out = []
    for start in range(0, len(corpus), batch):
        chunk = corpus.paths[start : start + batch]
        pts = np.stack([p.points for p in chunk])
        noise = np.stack(
            [_noise_for(seed, p.word, start + j, L, model.config.noise_dim) for j, p in enumerate(chunk)]
        )
        ys = transfer_points(model, pts, noise)
        out.extend(Path(p.word, y, Source.GAN) for p, y in zip(chunk, ys))
    meta = dict(corpus.metadata)
    meta.update({"generator": "gan-transfer", "mode": Source.GAN.value, "transfer_seed": int(seed)})
    return Corpus(tuple(out), meta)


# -- training --------------------------------------------------------------


def _as_points(batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        return _check_points(batch)
    return np.stack([p.points for p in batch])


def generator_objective(model: GanModel, x: np.ndarray, noise: np.ndarray, words: Sequence[str]) -> float:
    """The quantity the joint generator/classifier step descends, at current parameters."""
    lam = model.config.lam
    y, _ = model.generator.forward(x, noise)
    total = 0.0
    if lam > 0:
        logit, _ = model.discriminator.forward(y)
        adv = -np.mean(softplus(logit)) if model.config.literal_minimax else np.mean(softplus(-logit))
        total += lam * (adv + float(np.mean(batch_delta(x, y))))
    if lam < 1:
        logp, _ = model.classifier.forward(y)
        targets = [model.classifier.alphabet.encode(w) for w in words]
        losses, _ = ctc_forward_backward(logp, targets, model.classifier.alphabet.blank, need_grad=False)
        ok = np.isfinite(losses)
        total += (1.0 - lam) * (float(losses[ok].mean()) if ok.any() else 0.0)
    return float(total)


def mode_seeking_loss(y1, y2, z1, z2, eps: float = 1e-5):
    """Mean over the batch of ``1 / (r + eps)`` with ``r = mean|y1 - y2| / mean|z1 - z2|``.

    Small when two noise draws for the same input give different outputs.
    Returns ``(value, d/dy1, d/dy2)``.
    """
    B = y1.shape[0]
    diff = y1 - y2
    n_y = diff[0].size
    d_y = np.abs(diff).reshape(B, -1).mean(axis=1)
    d_z = np.abs(z1 - z2).reshape(B, -1).mean(axis=1)
    r = d_y / d_z
    value = float(np.mean(1.0 / (r + eps)))
    coef = -1.0 / (B * (r + eps) ** 2 * d_z * n_y)
    dy1 = coef[:, None, None] * np.sign(diff)
    return value, dy1, -dy1


def _scaled(grads: nn.Params, s: float) -> nn.Params:
    return {k: v * s for k, v in grads.items()}


def _add_into(acc: nn.Params, grads: nn.Params) -> nn.Params:
    for k, v in grads.items():
        acc[k] = acc[k] + v if k in acc else v
    return acc


def train_step(
    model: GanModel, batch_x, batch_p, words: Sequence[str] | None = None, noise=None, lr_scale: float = 1.0
) -> StepReport:
    """One discriminator step followed by one joint generator + classifier step.

    ``batch_x`` are synthetic paths (or a (B, L, 2) array with ``words``),
    ``batch_p`` user-style reference paths. ``noise`` defaults to a draw from
    the model's generator.
    """
    if batch_p is None or len(batch_p) == 0:
        raise InvalidArgument("reference batch (user-style paths) must be non-empty")
    if batch_x is None or len(batch_x) == 0:
        raise InvalidArgument("synthetic batch must be non-empty")
    if words is None:
        words = [p.word for p in batch_x]
    x = _as_points(batch_x)
    p = _as_points(batch_p)
    if x.shape[1] != p.shape[1]:
        raise LengthMismatch(f"synthetic paths have {x.shape[1]} points, reference paths {p.shape[1]}")
    cfg = model.config
    lam = cfg.lam
    lr_d, lr_g, lr_c = (lr * lr_scale for lr in cfg.learning_rates())
    if noise is None:
        noise = model.rng.standard_normal((x.shape[0], x.shape[1], cfg.noise_dim))

    gen, disc, clf = model.generator, model.discriminator, model.classifier
    y, g_cache = gen.forward(x, noise)
    delta = batch_delta(x, y)
    report = StepReport(math.nan, math.nan, math.nan, float(delta.mean()))

    if lam > 0:
        # discriminator ascent on E log D(P) + E log(1 - D(Y)), generator frozen
        both = np.concatenate([p, y], axis=0)
        logit, d_cache = disc.forward(both)
        lp, ly = logit[: len(p)], logit[len(p) :]
        report.d_loss = float(np.mean(softplus(-lp)) + np.mean(softplus(ly)))
        sig = nn.sigmoid(logit)
        dlogit = np.concatenate([(sig[: len(p)] - 1.0) / len(p), sig[len(p) :] / len(y)])
        d_grads, _ = disc.backward(d_cache, dlogit)
        report.gan_cost = -report.d_loss + report.delta_mean
        nn.clip_grads(d_grads, cfg.clip_norm)
        nn.adam_step(disc.params, d_grads, model.opt["discriminator"], lr_d)

    dy = np.zeros_like(y)
    if lam > 0:
        logit, d_cache = disc.forward(y)
        s = nn.sigmoid(logit)
        if cfg.literal_minimax:
            adv = -float(np.mean(softplus(logit)))
            dlogit = -s / len(y)
        else:
            adv = float(np.mean(softplus(-logit)))
            dlogit = (s - 1.0) / len(y)
        report.g_loss = adv + report.delta_mean
        _, dy_adv = disc.backward(d_cache, dlogit)
        dy += lam * (dy_adv + 2.0 * (y - x) / (y.shape[0] * y.shape[1]))
    if lam < 1:
        loss, c_grads, dy_ctc, skipped = clf.ctc(y, words)
        report.ctc_loss, report.skipped = loss, skipped
        dy += (1.0 - lam) * dy_ctc
        c_grads = _scaled(c_grads, 1.0 - lam)
        nn.clip_grads(c_grads, cfg.clip_norm)
        nn.adam_step(clf.params, c_grads, model.opt["classifier"], lr_c)
    g_grads = gen.backward(g_cache, dy)
    if lam > 0 and cfg.diversity_weight > 0 and cfg.noise_dim > 0:
        noise2 = model.rng.standard_normal(noise.shape)
        y2, cache2 = gen.forward(x, noise2)
        value, dy1, dy2 = mode_seeking_loss(y, y2, noise, noise2)
        report.g_loss += cfg.diversity_weight * value
        w = lam * cfg.diversity_weight
        _add_into(g_grads, gen.backward(g_cache, w * dy1))
        _add_into(g_grads, gen.backward(cache2, w * dy2))
    nn.clip_grads(g_grads, cfg.clip_norm)
    nn.adam_step(gen.params, g_grads, model.opt["generator"], lr_g)
    return report


def classifier_step(clf: Classifier, state: nn.AdamState, batch, lr: float, clip_norm: float | None = 5.0):
    """One CTC descent step on a batch of paths; returns (loss, n_skipped)."""
    pts = _as_points(batch)
    loss, grads, _, skipped = clf.ctc(pts, [p.word for p in batch])
    if not math.isnan(loss):
        nn.clip_grads(grads, clip_norm)
        nn.adam_step(clf.params, grads, state, lr)
    return loss, skipped


class EpochSampler:
    """Seeded minibatches drawn from successive random permutations of ``n`` items."""

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        if n < 1:
            raise InvalidArgument("cannot sample from an empty collection")
        self.n, self.batch, self.rng = n, batch, rng
        self._perm = np.empty(0, dtype=np.int64)

    def next(self) -> np.ndarray:
        while self._perm.size < self.batch:
            self._perm = np.concatenate([self._perm, self.rng.permutation(self.n)])
        out, self._perm = self._perm[: self.batch], self._perm[self.batch :]
        return out


def _check_corpora(corpus_s: Corpus, corpus_u: Corpus, length: int) -> None:
    if len(corpus_s) == 0 or len(corpus_u) == 0:
        raise InvalidArgument("both the synthetic and the user-style corpus must be non-empty")
    for name, corpus in (("synthetic", corpus_s), ("user", corpus_u)):
        lengths = {len(p) for p in corpus}
        if lengths != {length}:
            raise LengthMismatch(f"{name} corpus path lengths {sorted(lengths)} != model length {length}")
    ls, lu = corpus_s.metadata.get("layout"), corpus_u.metadata.get("layout")
    if ls is not None and lu is not None and ls != lu:
        raise InvalidArgument(f"corpora use different layouts: {ls!r} vs {lu!r}")


def pretrain_classifier(model: GanModel, paths: Sequence[Path], steps: int) -> list[float]:
    cfg = model.config
    rng = np.random.default_rng(derive_seed(cfg.seed, "pretrain", 0))
    sampler = EpochSampler(len(paths), cfg.batch, rng)
    losses = []
    for _ in range(steps):
        batch = [paths[i] for i in sampler.next()]
        loss, _ = classifier_step(model.classifier, model.opt["classifier"], batch, cfg.learning_rates()[2], cfg.clip_norm)
        losses.append(loss)
    return losses


def train(
    model: GanModel,
    corpus_s: Corpus,
    corpus_u: Corpus,
    iterations: int | None = None,
    checkpoint_dir=None,
    progress=None,
) -> tuple[GanModel, list[StepReport]]:
    """Pre-train the classifier, then run ``iterations`` alternating GAN steps."""
    cfg = model.config
    iterations = cfg.iterations if iterations is None else iterations
    if iterations < 0:
        raise InvalidArgument("iterations must be >= 0")
    _check_corpora(corpus_s, corpus_u, cfg.length)
    curves: list[StepReport] = []
    if iterations == 0:
        return model, curves
    if cfg.lam < 1.0 and cfg.pretrain_steps > 0:
        pretrain_classifier(model, list(corpus_s.paths) + list(corpus_u.paths), cfg.pretrain_steps)
    rng = np.random.default_rng(derive_seed(cfg.seed, "batches", 0))
    s_sampler = EpochSampler(len(corpus_s), cfg.batch, rng)
    u_sampler = EpochSampler(len(corpus_u), cfg.batch, rng)
    for step in range(1, iterations + 1):
        bx = [corpus_s.paths[i] for i in s_sampler.next()]
        bp = [corpus_u.paths[i] for i in u_sampler.next()]
        rep = train_step(model, bx, bp, lr_scale=cfg.lr_scale(step, iterations))
        curves.append(rep)
        if progress is not None:
            progress(step, rep)
        if checkpoint_dir is not None and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
            model.save(FsPath(checkpoint_dir) / f"gan_step{step:06d}.json")
    return model, curves


def loss_curves_csv(curves: Sequence[StepReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "d_loss", "g_loss", "ctc_loss", "delta_mean"])
    for i, r in enumerate(curves, 1):
        w.writerow([i] + [repr(float(v)) for v in (r.d_loss, r.g_loss, r.ctc_loss, r.delta_mean)])
    return buf.getvalue()
