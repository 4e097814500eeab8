"""
Information measures of Levy channels with finite-support inputs.

Mutual information and output relative entropy are computed as single
output integrals of posterior quantities,

    I(X; Y)   = E_Y[ sum_i w_i(Y) ln(w_i(Y) / p_i) ],
    D(P_Y||Q_Y) = E_{P_Y}[ ln f_P(Y) - ln f_Q(Y) ],

which keeps the integrands bounded.  The SNR derivative of the mutual
information is taken by finite differences and the SNR integrals of
expected losses by :func:`~levy_channels.quadrature.integrate_snr`, so each
side of the information-estimation identities comes from its own numerical
path.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .channels import DomainError, LevyChannel
from .posterior import DiscretePrior, expected_levy_loss, mismatch_excess
from .quadrature import (DivergenceError, QuadResult, integrate_snr,
                         mixture_expectation)

__all__ = [
    "AbsoluteContinuityError",
    "StepUnderflowError",
    "InfoCurve",
    "mutual_information",
    "mi_derivative",
    "output_relative_entropy",
    "relent_derivative",
    "law_mutual_information",
    "law_relative_entropy",
    "entropy_via_loss_integral",
    "relative_entropy_via_loss_integral",
    "mi_curve",
    "relent_curve",
]


class AbsoluteContinuityError(DivergenceError):
    """``P`` is not absolutely continuous with respect to ``Q``."""


class StepUnderflowError(DomainError):
    """The finite-difference stencil would reach non-positive SNR."""


# ---------------------------------------------------------------------------
# Information measures at a fixed SNR
# ---------------------------------------------------------------------------

def law_mutual_information(law, prior: DiscretePrior,
                           tol: float = 1e-11) -> QuadResult:
    """``I(X; Y)`` for any bound output law (see ``LevyChannel.at``)."""
    if prior.size == 1:
        return QuadResult(0.0, 0.0, 0)
    logp = np.log(prior.weights)

    def g(y, L, lmix):
        with np.errstate(invalid="ignore"):
            llr = L - lmix[:, None]
            w = np.exp(llr + logp[None, :])
            return np.sum(np.where(w > 0, w * llr, 0.0), axis=1)

    return mixture_expectation(law, prior.atoms, prior.weights, g, tol)


def law_relative_entropy(law, P: DiscretePrior, Q: DiscretePrior,
                         tol: float = 1e-11) -> QuadResult:
    """``D(P_Y || Q_Y)`` for any bound output law."""
    support = np.union1d(P.atoms, Q.atoms)
    p_w, q_w = P.on(support), Q.on(support)
    with np.errstate(divide="ignore"):
        logq = np.log(q_w)

    def g(y, L, lmix):
        lq = special.logsumexp(L + logq[None, :], axis=1)
        if np.any(np.isneginf(lq) & np.isfinite(lmix)):
            raise AbsoluteContinuityError(
                "output law under Q vanishes where the law under P does not")
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(lmix), lmix - lq, 0.0)

    return mixture_expectation(law, support, p_w, g, tol)


def mutual_information(ch: LevyChannel, prior: DiscretePrior, gamma: float,
                       tol: float = 1e-11) -> QuadResult:
    """``I(X; Y_gamma)`` in nats; exactly 0 at ``gamma = 0``."""
    prior.check_domain(ch)
    if gamma == 0:
        return QuadResult(0.0, 0.0, 0)
    if not gamma > 0:
        raise DomainError("gamma must be non-negative")
    return law_mutual_information(ch.at(gamma), prior, tol)


def output_relative_entropy(ch: LevyChannel, P: DiscretePrior,
                            Q: DiscretePrior, gamma: float,
                            tol: float = 1e-11) -> QuadResult:
    """``D(P_{Y_gamma} || Q_{Y_gamma})`` between the two output laws."""
    P.check_domain(ch)
    Q.check_domain(ch)
    if gamma == 0:
        return QuadResult(0.0, 0.0, 0)
    if not gamma > 0:
        raise DomainError("gamma must be non-negative")
    return law_relative_entropy(ch.at(gamma), P, Q, tol)


def _richardson(fn, gamma: float, tol: float) -> QuadResult:
    """Central difference with one Richardson step.

    ``h = max(1e-3, 1e-3 gamma)``.  The error estimate is the extrapolation
    residual plus the propagated quadrature errors of the four evaluations.
    """
    h = max(1e-3, 1e-3 * gamma)
    if gamma < h:
        raise StepUnderflowError(
            f"gamma={gamma:g} is below the difference step {h:g}")
    # quadrature accuracy needed so that propagated errors stay below tol
    qtol = max(tol * h / 10, 1e-14)
    f = {s: fn(gamma + s, qtol) for s in (-h, -h / 2, h / 2, h)}
    d1 = (f[h].value - f[-h].value) / (2 * h)
    d2 = (f[h / 2].value - f[-h / 2].value) / h
    rich = (4 * d2 - d1) / 3
    e1 = (f[h].error_estimate + f[-h].error_estimate) / (2 * h)
    e2 = (f[h / 2].error_estimate + f[-h / 2].error_estimate) / h
    err = abs(rich - d2) + (4 * e2 + e1) / 3
    evals = sum(r.evaluations for r in f.values())
    return QuadResult(float(rich), float(err), evals)


def mi_derivative(ch: LevyChannel, prior: DiscretePrior, gamma: float,
                  tol: float = 1e-6) -> QuadResult:
    """``d I(X; Y_gamma) / d gamma`` by differencing the mutual information."""
    if prior.size == 1:
        return QuadResult(0.0, 0.0, 0)
    return _richardson(lambda g, t: mutual_information(ch, prior, g, t),
                       gamma, tol)


def relent_derivative(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                      gamma: float, tol: float = 1e-6) -> QuadResult:
    """``d D(P_{Y_gamma} || Q_{Y_gamma}) / d gamma`` by differencing."""
    return _richardson(
        lambda g, t: output_relative_entropy(ch, P, Q, g, t), gamma, tol)


# ---------------------------------------------------------------------------
# SNR-integral representations
# ---------------------------------------------------------------------------

class _Tracked:
    """Wraps an SNR integrand returning ``QuadResult`` and records the
    largest inner error and the largest SNR visited."""

    def __init__(self, fn):
        self.fn = fn
        self.max_err = 0.0
        self.max_snr = 0.0
        self.calls = 0

    def __call__(self, alpha):
        res = self.fn(alpha)
        self.max_err = max(self.max_err, res.error_estimate)
        self.max_snr = max(self.max_snr, alpha)
        self.calls += 1
        return res.value

    def budget(self, res: QuadResult) -> QuadResult:
        # inner errors integrate to at most max_err per unit SNR
        return QuadResult(res.value,
                          res.error_estimate + self.max_err * self.max_snr,
                          res.evaluations, res.converged)


def entropy_via_loss_integral(ch: LevyChannel, prior: DiscretePrior,
                              tol: float = 1e-4, *,
                              max_snr: float = 2.0**14) -> QuadResult:
    """``int_0^inf E[l_L(X, Xhat(Y_alpha))] d alpha``, which equals ``H(X)``.

    The matched expected loss decays exponentially in the SNR for discrete
    inputs; the range beyond a doubling cut-off is extrapolated by an
    exponential fit whose disagreement with a two-point estimate is part of
    the error estimate.
    """
    prior.check_domain(ch)
    if prior.size == 1:
        return QuadResult(0.0, 0.0, 0)
    inner = tol * 1e-3
    h = _Tracked(lambda a: expected_levy_loss(ch, prior, None, a, inner))
    res = integrate_snr(h, 0.0, np.inf, tol, max_snr=max_snr)
    return h.budget(res)


def relative_entropy_via_loss_integral(ch: LevyChannel, P: DiscretePrior,
                                       Q: DiscretePrior, tol: float = 1e-4,
                                       *, check_support: bool = True,
                                       max_snr: float = 2.0**14
                                       ) -> QuadResult:
    """``int_0^inf (mismatched - matched expected loss) d alpha = D(P || Q)``.

    Every atom of ``P`` must be an atom of ``Q``; otherwise the relative
    entropy is infinite and :class:`AbsoluteContinuityError` is raised up
    front.  With ``check_support=False`` the integral is attempted anyway
    and the non-decaying integrand is reported as :class:`DivergenceError`.
    """
    P.check_domain(ch)
    Q.check_domain(ch)
    if check_support and not np.all(np.isin(P.atoms, Q.atoms)):
        raise AbsoluteContinuityError(
            "P has atoms outside the support of Q; D(P || Q) is infinite")
    if np.array_equal(P.atoms, Q.atoms) and np.array_equal(P.weights,
                                                           Q.weights):
        return QuadResult(0.0, 0.0, 0)
    inner = tol * 1e-3
    h = _Tracked(lambda a: mismatch_excess(ch, P, Q, a, inner))
    res = integrate_snr(h, 0.0, np.inf, tol, max_snr=max_snr)
    return h.budget(res)


# ---------------------------------------------------------------------------
# Curves over SNR
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InfoCurve:
    """An information measure tabulated on an increasing SNR grid."""

    gammas: np.ndarray
    values: np.ndarray
    error_estimates: np.ndarray
    label: str = ""

    def __post_init__(self):
        g = np.asarray(self.gammas, dtype=float)
        if g.ndim != 1 or np.any(np.diff(g) <= 0):
            raise ValueError("SNR grid must be strictly increasing")
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "values", np.asarray(self.values, float))
        object.__setattr__(self, "error_estimates",
                           np.asarray(self.error_estimates, float))

    def is_nondecreasing(self, slack: float = 0.0) -> bool:
        """Monotone up to the reported errors plus ``slack``."""
        step = np.diff(self.values)
        allow = self.error_estimates[1:] + self.error_estimates[:-1] + slack
        return bool(np.all(step >= -allow))

    def bounded_by(self, bound: float, slack: float = 0.0) -> bool:
        return bool(np.all(self.values <= bound + self.error_estimates + slack))


def mi_curve(ch: LevyChannel, prior: DiscretePrior, gammas: Sequence[float],
             tol: float = 1e-10) -> InfoCurve:
    res = [mutual_information(ch, prior, g, tol) for g in gammas]
    return InfoCurve(np.asarray(gammas, float), [r.value for r in res],
                     [r.error_estimate for r in res], "mutual information")


def relent_curve(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                 gammas: Sequence[float], tol: float = 1e-10) -> InfoCurve:
    res = [output_relative_entropy(ch, P, Q, g, tol) for g in gammas]
    return InfoCurve(np.asarray(gammas, float), [r.value for r in res],
                     [r.error_estimate for r in res], "relative entropy")
