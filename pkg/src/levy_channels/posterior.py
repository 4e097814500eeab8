"""
Bayesian estimation for finite-support input laws.

A :class:`DiscretePrior` puts mass ``p_i`` on atoms ``x_i``.  Given an
output ``y`` the posterior weights are ``w_i(y) ~ p_i f(y | x_i)`` and the
reconstruction minimising the expected Levy loss is

    r0 = sum_i w_i phi'(x_i),        r_z = sum_i w_i exp(phi'(x_i) z),

a finite mixture of exponentials in the jump size ``z``.  Expected losses
are therefore single output integrals whose integrand contains one
jump-measure integral per output node; the two nested quadratures report
their errors separately and the inner error is added to the budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .channels import DiscreteJumpWeights, DomainError, LevyChannel
from .losses import Reconstruction, jump_loss_matrix, poisson_loss_from_logs
from .quadrature import (DivergenceError, QuadResult, QuadratureError,
                         mixture_expectation)

__all__ = [
    "DiscretePrior",
    "ZeroLikelihoodError",
    "InfiniteLossError",
    "PosteriorResult",
    "posterior",
    "optimal_reconstruction",
    "expected_levy_loss",
    "expected_losses",
    "mismatch_excess",
    "pythagorean_terms",
    "regularity_check",
    "RegularityReport",
]

# posterior mass below which an atom is reported as dropped
DEFICIT_REPORT = 1e-12


class ZeroLikelihoodError(DomainError):
    """No atom of the prior can produce the observed output."""


class InfiniteLossError(ArithmeticError):
    """The decoder reconstructs zero where the true input needs mass."""


@dataclass(frozen=True, eq=False)
class DiscretePrior:
    """Finite-support law with sorted distinct atoms and positive weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_1d(np.asarray(self.atoms, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if atoms.ndim != 1 or atoms.shape != weights.shape or atoms.size == 0:
            raise ValueError("atoms and weights must be 1-D of equal length")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be distinct and sorted increasingly")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_pairs(cls, pairs) -> "DiscretePrior":
        """Build from ``{atom: weight}`` or ``[(atom, weight), ...]``, any order."""
        items = sorted(dict(pairs).items())
        return cls(np.array([a for a, _ in items]),
                   np.array([w for _, w in items]))

    @classmethod
    def point_mass(cls, x: float) -> "DiscretePrior":
        return cls(np.array([float(x)]), np.array([1.0]))

    @classmethod
    def uniform(cls, atoms: Sequence[float]) -> "DiscretePrior":
        atoms = np.sort(np.asarray(atoms, dtype=float))
        return cls(atoms, np.full(atoms.size, 1.0 / atoms.size))

    @property
    def size(self) -> int:
        return int(self.atoms.size)

    def entropy(self) -> float:
        """``-sum p ln p`` in nats."""
        return float(-np.sum(special.xlogy(self.weights, self.weights)))

    def on(self, support: np.ndarray) -> np.ndarray:
        """Weights of this law on a larger sorted ``support`` (zeros elsewhere)."""
        out = np.zeros(support.size)
        idx = np.searchsorted(support, self.atoms)
        if np.any(idx >= support.size) or np.any(support[idx] != self.atoms):
            raise ValueError("support does not contain every atom")
        out[idx] = self.weights
        return out

    def kl(self, other: "DiscretePrior") -> float:
        """``D(self || other)``; infinite unless every atom of ``self`` is an
        atom of ``other``."""
        support = np.union1d(self.atoms, other.atoms)
        p, q = self.on(support), other.on(support)
        if np.any((p > 0) & (q == 0)):
            return math.inf
        return float(np.sum(special.rel_entr(p, q)))

    def check_domain(self, ch: LevyChannel):
        ch.input_domain.check(self.atoms, "prior atoms")

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    def __repr__(self):
        pairs = ", ".join(f"{a:g}: {w:g}" for a, w in
                          zip(self.atoms, self.weights))
        return f"DiscretePrior({{{pairs}}})"


# ---------------------------------------------------------------------------
# Posterior and reconstruction at a single output
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PosteriorResult:
    """Posterior weights with the mass of underflowed atoms."""

    weights: np.ndarray
    dropped: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    deficit: float = 0.0

    @property
    def significant_deficit(self) -> bool:
        return self.deficit > DEFICIT_REPORT


def _log_posterior(L, logp):
    """Row-wise normalised log posterior from a log-likelihood matrix."""
    joint = L + logp[None, :]
    lmix = special.logsumexp(joint, axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return joint - lmix


def posterior(ch: LevyChannel, prior: DiscretePrior, gamma: float, y,
              full_output: bool = False):
    """Posterior weights ``w_i(y)``, computed in log space.

    Atoms whose weight underflows are reported as dropped together with the
    largest weight they could have had (``deficit``), when ``full_output``.
    """
    prior.check_domain(ch)
    L = ch.at(gamma).loglik(prior.atoms, np.atleast_1d(ch._check_output(y)))
    with np.errstate(divide="ignore"):
        logp = np.log(prior.weights)
    if np.all(np.isneginf(L)):
        raise ZeroLikelihoodError(
            f"output {y!r} has zero likelihood under every atom of {prior}")
    lw = _log_posterior(L, logp)[0]
    w = np.exp(lw)
    if not full_output:
        return w
    # atoms that can produce y but whose weight underflowed
    dropped = np.flatnonzero((w == 0) & np.isfinite(lw))
    deficit = (float(np.exp(special.logsumexp(lw[dropped])))
               if dropped.size else 0.0)
    return PosteriorResult(w, dropped, deficit)


def optimal_reconstruction(ch: LevyChannel, prior: DiscretePrior,
                           gamma: float, y) -> Reconstruction:
    """Reconstruction minimising the expected Levy loss given output ``y``."""
    w = posterior(ch, prior, gamma, y)
    thetas = np.asarray(ch.dphi(prior.atoms), dtype=float)
    keep = w > 0
    with np.errstate(invalid="ignore"):
        finite = np.isfinite(thetas) & keep
        r0 = float(np.sum(w[finite] * thetas[finite])) if finite.any() else 0.0
    return Reconstruction(r0, thetas[keep], w[keep])


# ---------------------------------------------------------------------------
# Expected losses
# ---------------------------------------------------------------------------

def _setup(ch, true_prior, decoders):
    true_prior.check_domain(ch)
    for q in decoders:
        q.check_domain(ch)
    support = true_prior.atoms
    for q in decoders:
        support = np.union1d(support, q.atoms)
    thetas = np.asarray(ch.dphi(support), dtype=float)
    return support, thetas


def _loss_block(ch, thetas, p_w, dec_logw, L, inner_tol):
    """Per-output expected losses for several decoders.

    Parameters
    ----------
    thetas : (n,) natural parameters of the support atoms.
    p_w : (n,) true prior weights on the support.
    dec_logw : list of (n,) log prior weights of each decoder.
    L : (ny, n) log-likelihood matrix.

    Returns ``(vals, inner_err)`` with ``vals`` of shape (len(dec_logw), ny)
    holding ``sum_i wP_i(y) loss(x_i, r_Q(y))``.
    """
    ny, n = L.shape
    with np.errstate(divide="ignore"):
        lwP = _log_posterior(L, np.log(p_w))
    wP = np.exp(lwP)
    true_idx = np.flatnonzero(p_w > 0)
    sigma = ch.triple.volatility
    finite_t = np.isfinite(thetas)
    out = np.zeros((len(dec_logw), ny))
    inner_err = 0.0
    for d, logq in enumerate(dec_logw):
        lwQ = _log_posterior(L, logq)
        total = np.zeros(ny)
        if sigma > 0:
            wQ = np.exp(lwQ)
            t = np.where(finite_t, thetas, 0.0)
            r0 = wQ @ t
            cont = 0.5 * sigma ** 2 * np.square(t[None, :] - r0[:, None])
            total += np.sum(wP * cont, axis=1)
        if ch.triple.jump_measure is not None:
            dec_idx = np.flatnonzero(np.isfinite(logq))
            res = jump_loss_matrix(ch, thetas[true_idx], thetas[dec_idx],
                                   lwQ[:, dec_idx], inner_tol)
            J = np.asarray(res.value)
            inner_err = max(inner_err, res.error_estimate)
            wt = wP[:, true_idx]
            bad = (wt > 0) & ~np.isfinite(J)
            if np.any(bad):
                raise InfiniteLossError(
                    "decoder assigns zero reconstruction where the true input "
                    "has positive posterior mass")
            with np.errstate(invalid="ignore"):
                total += np.sum(np.where(wt > 0, wt * J, 0.0), axis=1)
        out[d] = total
    return out, inner_err


def expected_losses(ch: LevyChannel, true_prior: DiscretePrior,
                    decoders: Sequence[DiscretePrior], gamma: float,
                    tol: float = 1e-7, differences: bool = False
                    ) -> QuadResult:
    """Expected Levy losses ``E_P[l_L(X, Xhat^Q(Y))]`` for several decoders.

    ``X ~ true_prior`` and ``Y`` is the output at SNR ``gamma``.  All
    decoders share one output quadrature.  With ``differences=True`` the
    returned vector holds ``loss(decoders[k]) - loss(decoders[0])`` for
    ``k >= 1``, integrated directly so that the budget refers to the
    differences themselves.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    support, thetas = _setup(ch, true_prior, decoders)
    p_w = true_prior.on(support)
    with np.errstate(divide="ignore"):
        dec_logw = [np.log(q.on(support)) for q in decoders]
    inner_tol = tol / 4
    worst_inner = [0.0]

    def g(y, L, lmix):
        vals, err = _loss_block(ch, thetas, p_w, dec_logw, L, inner_tol)
        worst_inner[0] = max(worst_inner[0], err)
        if differences:
            return vals[1:] - vals[:1]
        return vals

    res = mixture_expectation(ch.at(gamma), support, p_w, g, tol / 2)
    inner = 2 * worst_inner[0] if differences else worst_inner[0]
    value = np.atleast_1d(res.value)
    return QuadResult(value, res.error_estimate + inner, res.evaluations,
                      res.converged)


def expected_levy_loss(ch: LevyChannel, true_prior: DiscretePrior,
                       decoder: DiscretePrior | None, gamma: float,
                       tol: float = 1e-7) -> QuadResult:
    """Expected Levy loss of the decoder optimal for ``decoder`` when the
    input follows ``true_prior`` (matched when ``decoder`` is ``None``)."""
    decoder = true_prior if decoder is None else decoder
    res = expected_losses(ch, true_prior, [decoder], gamma, tol)
    return QuadResult(float(res.value[0]), res.error_estimate,
                      res.evaluations, res.converged)


def mismatch_excess(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                    gamma: float, tol: float = 1e-7) -> QuadResult:
    """Excess expected loss of the decoder for ``Q`` over the one for ``P``,
    both under inputs drawn from ``P``."""
    res = expected_losses(ch, P, [P, Q], gamma, tol, differences=True)
    return QuadResult(float(res.value[0]), res.error_estimate,
                      res.evaluations, res.converged)


# ---------------------------------------------------------------------------
# Orthogonality of conditional-mean estimation errors
# ---------------------------------------------------------------------------

def pythagorean_terms(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                      gamma: float, z: float | None = None,
                      tol: float = 1e-9) -> dict:
    """Both sides of the two error-decomposition identities.

    For ``A = phi'(X)`` and squared error, and for ``B = exp(phi'(X) z)`` at a
    jump size ``z`` with the Poisson loss, with conditional means ``E_P``,
    ``E_Q`` given the output::

        E_P l(A, E_Q A) - E_P l(A, E_P A) = E_P l(E_P A, E_Q A)

    Returns a dict with keys ``"gauss"`` and ``"poisson"`` mapping to
    ``(lhs, rhs, error_budget)`` tuples.
    """
    if z is None:
        z = 1.0
    support, thetas = _setup(ch, P, [Q])
    p_w = P.on(support)
    with np.errstate(divide="ignore"):
        logp, logq = np.log(p_w), np.log(Q.on(support))
    fin = np.isfinite(thetas)
    A = np.where(fin, thetas, 0.0)
    with np.errstate(invalid="ignore"):
        lB = np.where(fin, thetas * z, -np.inf)

    def g(y, L, lmix):
        wP = np.exp(_log_posterior(L, logp))
        lwQ = _log_posterior(L, logq)
        wQ = np.exp(lwQ)
        eP, eQ = wP @ A, wQ @ A
        g_lhs = np.sum(wP * (0.5 * (A[None, :] - eQ[:, None]) ** 2
                             - 0.5 * (A[None, :] - eP[:, None]) ** 2), axis=1)
        g_rhs = 0.5 * (eP - eQ) ** 2
        with np.errstate(divide="ignore"):
            lbP = special.logsumexp(np.log(wP) + lB[None, :], axis=1)
        lbQ = special.logsumexp(lwQ + lB[None, :], axis=1)
        lossQ = poisson_loss_from_logs(lB[None, :], lbQ[:, None])
        lossP = poisson_loss_from_logs(lB[None, :], lbP[:, None])
        with np.errstate(invalid="ignore"):
            p_lhs = (np.sum(np.where(wP > 0, wP * lossQ, 0.0), axis=1)
                     - np.sum(np.where(wP > 0, wP * lossP, 0.0), axis=1))
        p_rhs = poisson_loss_from_logs(lbP, lbQ)
        return np.stack([g_lhs, g_rhs, p_lhs, p_rhs])

    res = mixture_expectation(ch.at(gamma), support, p_w, g, tol)
    v = res.value
    budget = 2 * res.error_estimate
    return {"gauss": (float(v[0]), float(v[1]), budget),
            "poisson": (float(v[2]), float(v[3]), budget)}


# ---------------------------------------------------------------------------
# Input regularity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    """Values of the two moment conditions on the input law."""

    second_moment: float | None  # E[phi'(X)^2], only when sigma > 0
    jump_moment: QuadResult | None  # E int phi'(X) z e^{phi'(X) z} nu(dz)

    @property
    def finite(self) -> bool:
        ok = self.second_moment is None or math.isfinite(self.second_moment)
        if self.jump_moment is not None:
            ok = ok and math.isfinite(float(np.sum(self.jump_moment.value)))
        return ok


def regularity_check(ch: LevyChannel, prior: DiscretePrior,
                     tol: float = 1e-10) -> RegularityReport:
    """Evaluate the moment conditions under which the identities hold.

    Both are finite for finite-support priors inside the input domain; a
    quadrature that fails to converge is reported as divergence.
    """
    prior.check_domain(ch)
    thetas = np.asarray(ch.dphi(prior.atoms), dtype=float)
    fin = np.isfinite(thetas)
    second = None
    if ch.triple.volatility > 0:
        second = float(np.sum(prior.weights[fin] * thetas[fin] ** 2))
    nu = ch.triple.jump_measure
    jump = None
    if nu is not None:
        t = thetas[fin]
        wts = prior.weights[fin]

        def f(z, log_mass):
            tz = t[:, None] * z[None, :]
            with np.errstate(over="ignore", invalid="ignore"):
                v = tz * np.exp(tz + log_mass[None, :])
            return wts @ v

        try:
            if isinstance(nu, DiscreteJumpWeights):
                tmax = float(t.max()) if t.size else 0.0
                jump = nu.integrate(f, tol, theta_max=tmax, log_weighted=True)
            else:
                jump = nu.integrate(f, tol, log_weighted=True)
        except (QuadratureError, DomainError) as exc:
            raise DivergenceError(
                f"regularity integral does not converge: {exc}") from exc
    return RegularityReport(second, jump)
