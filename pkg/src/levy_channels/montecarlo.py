"""
Monte Carlo estimates used as an independent check on the quadrature.

All randomness comes from numpy's PCG64 generator.  A run with seed ``s``
spawns one child stream for the input draws and one per prior atom for the
outputs, so estimates are reproducible bit for bit given ``(seed, n)`` and
the configuration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .channels import LevyChannel
from .losses import jump_loss_matrix
from .posterior import DiscretePrior, InfiniteLossError

__all__ = [
    "GENERATOR",
    "McEstimate",
    "sample_output",
    "sample_joint",
    "mc_expected_loss",
    "mc_mutual_information",
]

GENERATOR = "PCG64"


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error ``std / sqrt(n)``."""

    value: float
    std_error: float
    n: int
    seed: int
    generator: str = GENERATOR

    @classmethod
    def from_samples(cls, samples, seed):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else np.inf
        return cls(float(samples.mean()), se, n, int(seed))

    def z_score(self, reference: float) -> float:
        """Distance to ``reference`` in standard errors."""
        if self.std_error == 0:
            return 0.0 if self.value == reference else np.inf
        return abs(self.value - reference) / self.std_error


def _generator(seed_seq) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_seq))


def sample_output(ch: LevyChannel, x: float, gamma: float, seed: int,
                  n: int) -> np.ndarray:
    """``n`` independent outputs of ``ch`` at SNR ``gamma`` given input ``x``."""
    ch.input_domain.check(x, "x")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    rng = _generator(np.random.SeedSequence(seed))
    return np.asarray(ch.sample(float(x), gamma, n, rng), dtype=float)


def sample_joint(ch: LevyChannel, prior: DiscretePrior, gamma: float,
                 seed: int, n: int):
    """Draw ``n`` pairs ``(index of X, Y)`` with ``X ~ prior``.

    Returns the atom indices and the outputs.
    """
    prior.check_domain(ch)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(1 + prior.size)
    idx = _generator(streams[0]).choice(prior.size, size=n, p=prior.weights)
    y = np.empty(n)
    for i in range(prior.size):
        sel = idx == i
        y[sel] = ch.sample(float(prior.atoms[i]), gamma, int(sel.sum()),
                           _generator(streams[1 + i]))
    return idx, y


def mc_mutual_information(ch: LevyChannel, prior: DiscretePrior,
                          gamma: float, seed: int, n: int) -> McEstimate:
    """Sample average of ``ln f(Y | X) - ln f_P(Y)``."""
    if prior.size == 1:
        return McEstimate(0.0, 0.0, n, seed)
    idx, y = sample_joint(ch, prior, gamma, seed, n)
    L = ch.at(gamma).loglik(prior.atoms, y)
    lmix = special.logsumexp(L + np.log(prior.weights)[None, :], axis=1)
    vals = L[np.arange(n), idx] - lmix
    return McEstimate.from_samples(vals, seed)


def mc_expected_loss(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                     gamma: float, seed: int, n: int,
                     tol: float = 1e-9) -> McEstimate:
    """Sample average of the Levy loss of the ``Q``-optimal reconstruction
    when ``X ~ P``.

    Jump-measure integrals are evaluated once per distinct output value, so
    integer-valued channels are cheap even for large ``n``.
    """
    idx, y = sample_joint(ch, P, gamma, seed, n)
    x_theta = np.asarray(ch.dphi(P.atoms), dtype=float)
    q_theta = np.asarray(ch.dphi(Q.atoms), dtype=float)
    uy, inv = np.unique(y, return_inverse=True)
    L = ch.at(gamma).loglik(Q.atoms, uy)
    joint = L + np.log(Q.weights)[None, :]
    lwQ = joint - special.logsumexp(joint, axis=1, keepdims=True)
    loss = np.zeros((uy.size, P.size))
    sigma = ch.triple.volatility
    if sigma > 0:
        t = np.where(np.isfinite(q_theta), q_theta, 0.0)
        r0 = np.exp(lwQ) @ t
        loss += 0.5 * sigma ** 2 * (x_theta[None, :] - r0[:, None]) ** 2
    if ch.triple.jump_measure is not None:
        res = jump_loss_matrix(ch, x_theta, q_theta, lwQ, tol)
        loss += np.asarray(res.value)
    vals = loss[inv, idx]
    if not np.all(np.isfinite(vals)):
        raise InfiniteLossError("sampled an input the decoder cannot "
                                "reconstruct")
    return McEstimate.from_samples(vals, seed)
