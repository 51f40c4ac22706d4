"""CTC loss, gradient, brute-force oracle and decoding.

Distributions are (K, |alphabet| + 1) arrays whose last column is the blank.
The dynamic programme runs in log space over the blank-expanded label
sequence and is batched across rows so a whole minibatch (or a whole lexicon
against one path) is one pass over time.
"""

from __future__ import annotations

import string
from functools import lru_cache
from typing import Sequence

import numpy as np

from swipegan.errors import InfeasibleTarget, NoFeasibleWord, TooLarge, UnknownCharacter

BLANK = "-"


class CtcAlphabet:
    """Ordered characters plus a blank at index ``len(characters)``."""

    def __init__(self, characters: str = string.ascii_lowercase):
        if len(set(characters)) != len(characters):
            raise ValueError("alphabet characters must be distinct")
        if BLANK in characters:
            raise ValueError(f"{BLANK!r} is reserved for the blank")
        self.characters = characters
        self.blank = len(characters)
        self._index = {c: i for i, c in enumerate(characters)}

    def __len__(self) -> int:
        return len(self.characters) + 1

    def __eq__(self, other):
        return isinstance(other, CtcAlphabet) and other.characters == self.characters

    def __repr__(self):
        return f"CtcAlphabet({self.characters!r})"

    def encode(self, word: str) -> list[int]:
        try:
            return [self._index[c] for c in word]
        except KeyError as exc:
            raise UnknownCharacter(f"character {exc.args[0]!r} not in CTC alphabet") from None

    def label(self, i: int) -> str:
        return BLANK if i == self.blank else self.characters[i]


DEFAULT_ALPHABET = CtcAlphabet()


def ctc_expand(word: str, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> list[int]:
    """Label indices of ``word`` with blanks before, between and after: length 2n+1."""
    out = [alphabet.blank]
    for i in alphabet.encode(word):
        out += [i, alphabet.blank]
    return out


def min_alignment_length(word: str) -> int:
    return len(word) + sum(1 for a, b in zip(word, word[1:]) if a == b)


def _lse3(a, b, c):
    m = np.maximum(np.maximum(a, b), c)
    ms = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return ms + np.log(np.exp(a - ms) + np.exp(b - ms) + np.exp(c - ms))


def _shift(a: np.ndarray, k: int) -> np.ndarray:
    """Shift along the state axis by ``k`` (positive: toward higher states), filling with -inf."""
    out = np.full_like(a, -np.inf)
    if k > 0:
        out[:, k:] = a[:, :-k]
    else:
        out[:, :k] = a[:, -k:]
    return out


def _prepare(log_probs: np.ndarray, targets: Sequence[Sequence[int]], blank: int):
    n_rows, K, _ = log_probs.shape
    S = np.array([2 * len(t) + 1 for t in targets])
    S_max = int(S.max())
    ext = np.full((n_rows, S_max), blank, dtype=np.int64)
    for r, t in enumerate(targets):
        ext[r, 1 : 2 * len(t) : 2] = t
    skip = np.zeros((n_rows, S_max), dtype=bool)
    skip[:, 2:] = (ext[:, 2:] != blank) & (ext[:, 2:] != ext[:, :-2])
    valid = np.arange(S_max)[None, :] < S[:, None]
    emit = np.take_along_axis(log_probs, np.broadcast_to(ext[:, None, :], (n_rows, K, S_max)), axis=2)
    return ext, skip, valid, emit, S


def ctc_forward_backward(log_probs: np.ndarray, targets: Sequence[Sequence[int]], blank: int, need_grad: bool = True):
    """Batched CTC over rows of ``log_probs`` (N, K, C).

    Returns ``(losses, grads)``: per-row negative log-likelihood (``inf`` when
    the target cannot be aligned in K steps) and, if requested, the gradient
    of each row's loss with respect to the pre-softmax logits, assuming
    ``log_probs`` is a log-softmax. Infeasible rows get zero gradient.
    """
    log_probs = np.asarray(log_probs, dtype=np.float64)
    N, K, C = log_probs.shape
    ext, skip, valid, emit, S = _prepare(log_probs, targets, blank)
    S_max = ext.shape[1]
    neg = -np.inf

    alpha = np.full((K, N, S_max), neg)
    a0 = np.full((N, S_max), neg)
    a0[:, 0] = emit[:, 0, 0]
    a0[:, 1:2] = np.where(S[:, None] > 1, emit[:, 0, 1:2], neg)
    alpha[0] = a0
    for k in range(1, K):
        prev = alpha[k - 1]
        s1 = _shift(prev, 1)
        s2 = np.where(skip, _shift(prev, 2), neg)
        alpha[k] = np.where(valid, _lse3(prev, s1, s2) + emit[:, k], neg)

    rows = np.arange(N)
    last = alpha[K - 1]
    end1 = last[rows, S - 1]
    end2 = np.where(S > 1, last[rows, np.maximum(S - 2, 0)], neg)
    ll = np.logaddexp(end1, end2)
    losses = -ll
    if not need_grad:
        return losses, None

    beta = np.full((K, N, S_max), neg)
    bK = np.full((N, S_max), neg)
    bK[rows, S - 1] = emit[rows, K - 1, S - 1]
    has2 = S > 1
    bK[rows[has2], S[has2] - 2] = emit[rows[has2], K - 1, S[has2] - 2]
    beta[K - 1] = bK
    skip_from = np.zeros_like(skip)
    skip_from[:, :-2] = skip[:, 2:]
    for k in range(K - 2, -1, -1):
        nxt = beta[k + 1]
        s1 = _shift(nxt, -1)
        s2 = np.where(skip_from, _shift(nxt, -2), neg)
        beta[k] = np.where(valid, _lse3(nxt, s1, s2) + emit[:, k], neg)

    feasible = np.isfinite(ll)
    with np.errstate(invalid="ignore"):
        log_gamma = alpha + beta - np.transpose(emit, (1, 0, 2)) - np.where(feasible, ll, 0.0)[None, :, None]
    gamma = np.where(np.isfinite(log_gamma), np.exp(log_gamma), 0.0)  # (K, N, S)
    onehot = np.zeros((N, S_max, C))
    onehot[rows[:, None], np.arange(S_max)[None, :], ext] = valid.astype(np.float64)
    occupancy = np.einsum("kns,nsc->nkc", gamma, onehot)
    grads = np.exp(log_probs) - occupancy
    grads[~feasible] = 0.0
    return losses, grads


def _log_probs(probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ValueError(f"expected a (K, C) distribution sequence, got shape {probs.shape}")
    with np.errstate(divide="ignore"):
        return np.log(probs)


def ctc_loss(probs, word: str, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> float:
    """Negative log of the total probability of all alignments of ``word``."""
    K = np.asarray(probs).shape[0]
    if K < 1:
        raise ValueError("need at least one time step")
    labels = alphabet.encode(word)
    if K < min_alignment_length(word):
        raise InfeasibleTarget(f"{word!r} needs >= {min_alignment_length(word)} steps, have {K}")
    losses, _ = ctc_forward_backward(_log_probs(probs)[None], [labels], alphabet.blank, need_grad=False)
    return float(losses[0])


def ctc_grad(probs, word: str, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> np.ndarray:
    """Gradient of :func:`ctc_loss` w.r.t. the logits whose softmax is ``probs``."""
    K = np.asarray(probs).shape[0]
    labels = alphabet.encode(word)
    if K < min_alignment_length(word):
        raise InfeasibleTarget(f"{word!r} needs >= {min_alignment_length(word)} steps, have {K}")
    _, grads = ctc_forward_backward(_log_probs(probs)[None], [labels], alphabet.blank)
    return grads[0]


# -- oracle ----------------------------------------------------------------


_CHUNK = 1 << 20


def _enumerate_block(start: int, stop: int, K: int, C: int, blank: int) -> tuple[np.ndarray, np.ndarray]:
    """Label strings number ``start..stop-1`` (base-C digits) and a code of each collapsed output."""
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((idx.size, K), dtype=np.int64)
    for k in range(K):
        digits[:, k] = (idx // C ** (K - 1 - k)) % C
    code = np.zeros(idx.size, dtype=np.int64)
    prev = np.full(idx.size, -1)
    for k in range(K):
        d = digits[:, k]
        emit = (d != blank) & (d != prev)
        code = np.where(emit, code * (C + 1) + d + 1, code)
        prev = d
    return digits, code


@lru_cache(maxsize=64)
def _enumeration(K: int, C: int, blank: int) -> tuple[np.ndarray, np.ndarray]:
    return _enumerate_block(0, C**K, K, C, blank)


def _word_code(labels: Sequence[int], C: int) -> int:
    code = 0
    for i in labels:
        code = code * (C + 1) + i + 1
    return code


def ctc_brute_force(probs, word: str, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> float:
    """Loss by explicit enumeration of every per-step label string (small cases only)."""
    probs = np.asarray(probs, dtype=np.float64)
    K, C = probs.shape
    if K > 10 or len(alphabet) - 1 > 5:
        raise TooLarge(f"enumeration guard: K={K} (max 10), |alphabet|={len(alphabet) - 1} (max 5)")
    if C != len(alphabet):
        raise ValueError(f"distribution has {C} entries, alphabet needs {len(alphabet)}")
    target = _word_code(alphabet.encode(word), C)
    steps = np.arange(K)[None, :]
    total = 0.0
    if C**K <= _CHUNK:
        digits, code = _enumeration(K, C, alphabet.blank)
        total = np.prod(probs[steps, digits[code == target]], axis=1).sum()
    else:
        for start in range(0, C**K, _CHUNK):
            digits, code = _enumerate_block(start, min(start + _CHUNK, C**K), K, C, alphabet.blank)
            total += np.prod(probs[steps, digits[code == target]], axis=1).sum()
    return float(-np.log(total)) if total > 0 else float("inf")


# -- decoding --------------------------------------------------------------


def greedy_decode(probs, alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> str:
    """Per-step argmax (lowest index wins ties), collapse repeats, drop blanks."""
    best = np.argmax(np.asarray(probs), axis=-1)
    out = []
    prev = None
    for i in best:
        if i != prev and i != alphabet.blank:
            out.append(alphabet.characters[i])
        prev = i
    return "".join(out)


def lexicon_scores(log_probs: np.ndarray, lexicon: Sequence[str], alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> np.ndarray:
    """CTC loss of every lexicon word for every path: (N, K, C) -> (N, W), ``inf`` if infeasible."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if log_probs.ndim == 2:
        log_probs = log_probs[None]
    N, K, C = log_probs.shape
    W = len(lexicon)
    labels = [alphabet.encode(w) for w in lexicon]
    ok = [j for j, w in enumerate(lexicon) if min_alignment_length(w) <= K]
    scores = np.full((N, W), np.inf)
    if not ok:
        return scores
    rows = np.repeat(log_probs, len(ok), axis=0)
    targets = [labels[j] for j in ok] * N
    losses, _ = ctc_forward_backward(rows, targets, alphabet.blank, need_grad=False)
    scores[:, ok] = losses.reshape(N, len(ok))
    return scores


def pick_top1(scores: np.ndarray, lexicon: Sequence[str]) -> list[str]:
    """Row-wise argmin with ties resolved to the lexicographically smallest word."""
    order = sorted(range(len(lexicon)), key=lambda j: lexicon[j])
    s = np.asarray(scores)[:, order]
    out = []
    for row in s:
        if not np.any(np.isfinite(row)):
            raise NoFeasibleWord("no lexicon word can be aligned to this output")
        out.append(lexicon[order[int(np.argmin(row))]])
    return out


def lexicon_top1(probs, lexicon: Sequence[str], alphabet: CtcAlphabet = DEFAULT_ALPHABET) -> str:
    """Lexicon word with the lowest CTC loss; no language model."""
    if not lexicon:
        raise ValueError("lexicon must be non-empty")
    scores = lexicon_scores(_log_probs(probs), lexicon, alphabet)
    return pick_top1(scores, lexicon)[0]
