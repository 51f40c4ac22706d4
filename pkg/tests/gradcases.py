"""Small seeded network instances for gradient checks (in <= 4, hidden <= 8, T <= 10)."""

from __future__ import annotations

import numpy as np

from swipegan import nn
from swipegan.ctc import CtcAlphabet
from swipegan.gan import Classifier, Discriminator, Generator, batch_delta, softplus

ALPHABET = CtcAlphabet("abcd")
WORDS = ["ab", "c", "dad"]


def _randomize(params, rng):
    # uniform(-1, 1) weights keep every coordinate's gradient well above the
    # finite-difference roundoff floor (default init leaves some near 1e-8)
    for k in params:
        params[k][...] = rng.uniform(-1.0, 1.0, params[k].shape)


def _sizes(rng):
    return int(rng.integers(4, 11)), int(rng.integers(2, 9)), int(rng.integers(1, 3))


def generator_case(seed: int):
    """Generator with the content-distance loss. Input features: 4 (no noise channels)."""
    rng = np.random.default_rng(seed)
    L, H, depth = _sizes(rng)
    x = rng.uniform(0.1, 0.9, (3, L, 2))
    noise = np.zeros((3, L, 0))
    net = Generator(H, depth, 0, 1.5, rng, zero_head=False)
    _randomize(net.params, rng)

    def loss(_params):
        y, cache = net.forward(x, noise)
        return float(batch_delta(x, y).mean()), net.backward(cache, 2.0 * (y - x) / (x.shape[0] * L))

    return loss, net.params


def discriminator_case(seed: int):
    """Discriminator with the logistic loss on a mixed real/generated batch."""
    rng = np.random.default_rng(seed)
    L, H, depth = _sizes(rng)
    x = rng.uniform(0.1, 0.9, (3, L, 2))
    labels = np.array([1.0, 0.0, 1.0])
    net = Discriminator(H, depth, rng)
    _randomize(net.params, rng)

    def loss(_params):
        logit, cache = net.forward(x)
        s = nn.sigmoid(logit)
        value = np.mean(labels * softplus(-logit) + (1 - labels) * softplus(logit))
        return float(value), net.backward(cache, (s - labels) / len(labels))[0]

    return loss, net.params


def classifier_case(seed: int):
    """Classifier with the CTC loss over a four-letter alphabet."""
    rng = np.random.default_rng(seed)
    L, H, depth = _sizes(rng)
    x = rng.uniform(0.1, 0.9, (3, L, 2))
    net = Classifier(H, depth, rng, ALPHABET)
    _randomize(net.params, rng)

    def loss(_params):
        value, grads, _, _ = net.ctc(x, WORDS)
        return value, grads

    return loss, net.params


CASES = {"generator": generator_case, "discriminator": discriminator_case, "classifier": classifier_case}
