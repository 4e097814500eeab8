"""
Loss functions of Levy channels.

The Levy loss of an input ``x`` against a reconstruction ``xhat`` is

    sigma^2 * l_G(phi'(x), xhat_0) + int l_P(exp(phi'(x) z), xhat_z) nu(dz)

where ``l_G`` is half the squared error and ``l_P`` the Poisson loss.  A
reconstruction is a scalar for the Brownian part plus a positive function of
the jump size.  All reconstructions that arise from Bayes estimation with a
discrete prior are finite mixtures of exponentials ``sum_j w_j exp(t_j z)``,
which is how :class:`Reconstruction` stores them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .channels import DiscreteJumpWeights, DomainError, LevyChannel
from .quadrature import QuadResult

__all__ = [
    "Reconstruction",
    "gauss_loss",
    "poisson_loss",
    "poisson_loss_from_logs",
    "levy_loss",
    "representative_loss",
    "point_mass_reconstruction",
    "jump_loss_matrix",
]

# rows of reconstructions integrated together in one vector quadrature
_ROW_BLOCK = 32


def gauss_loss(x, xhat):
    """Half squared error."""
    return 0.5 * np.square(np.asarray(x, dtype=float) - xhat)


def poisson_loss(x, xhat):
    """``x ln(x / xhat) - x + xhat`` with ``0 ln 0 = 0`` and ``l(x>0, 0) = inf``."""
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    if np.any(x < 0) or np.any(xhat < 0):
        raise DomainError("Poisson loss needs non-negative arguments")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = special.xlogy(x, x) - special.xlogy(x, xhat) - x + xhat
    return np.where((xhat == 0) & (x > 0), np.inf, out)


# (n - 1) / n!  for n = 2..17: series of (d - 1) e^d + 1 around d = 0
_G_SERIES = np.array([(n - 1) / special.factorial(n) for n in range(17, 1, -1)])


def _g(d):
    """``(d - 1) e^d + 1``, accurate near ``d = 0``."""
    d = np.asarray(d, dtype=float)
    small = np.abs(d) < 0.1
    with np.errstate(over="ignore", invalid="ignore"):
        out = d * np.exp(d) - np.expm1(d)
    if np.any(small):
        ds = d[small]
        out[small] = np.polyval(np.append(_G_SERIES, [0.0, 0.0]), ds)
    return out


def poisson_loss_from_logs(lu, lv, log_scale=0.0):
    """``exp(log_scale) * l_P(e^lu, e^lv)`` evaluated from logarithms.

    Written as ``e^lv * g(lu - lv)`` with ``g(d) = (d - 1) e^d + 1`` so that
    the cancellation between nearly equal arguments is handled by a series;
    the scale factor is applied in the exponent so that huge losses against
    vanishing measure weights do not produce ``inf * 0``.
    """
    lu, lv, ls = np.broadcast_arrays(np.asarray(lu, dtype=float),
                                     np.asarray(lv, dtype=float),
                                     np.asarray(log_scale, dtype=float))
    out = np.empty(lu.shape)
    u_zero = np.isneginf(lu)
    v_zero = np.isneginf(lv)
    both = ~u_zero & ~v_zero
    out[u_zero] = np.exp(lv[u_zero] + ls[u_zero])
    out[v_zero & u_zero] = 0.0
    out[v_zero & ~u_zero] = np.inf
    if np.any(both):
        d = lu[both] - lv[both]
        base = lv[both] + ls[both]
        big = d > 30
        vals = np.empty(d.shape)
        with np.errstate(over="ignore"):
            vals[~big] = np.exp(base[~big]) * _g(d[~big])
            # g(d) = e^d (d - 1 + e^-d) for large d
            vals[big] = np.exp(base[big] + d[big]
                               + np.log(d[big] - 1 + np.exp(-d[big])))
        out[both] = vals
    return out


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Estimate of a channel input for the Levy loss.

    ``r0`` is the estimate for the continuous part (natural-parameter scale)
    and the jump part is ``r(z) = sum_j weights[j] * exp(thetas[j] * z)``,
    unless an explicit positive ``rate`` function is supplied.
    """

    r0: float
    thetas: np.ndarray
    weights: np.ndarray
    rate_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def log_rate(self, z):
        z = np.asarray(z, dtype=float)
        if self.rate_fn is not None:
            with np.errstate(divide="ignore"):
                return np.log(self.rate_fn(z))
        with np.errstate(divide="ignore", invalid="ignore"):
            lw = np.log(self.weights)
            expo = np.where(np.isneginf(self.thetas)[:, None], -np.inf,
                            self.thetas[:, None] * z[None, :])
            return special.logsumexp(lw[:, None] + expo, axis=0)

    def rate(self, z):
        return np.exp(self.log_rate(z))

    @property
    def theta_max(self) -> float:
        finite = self.thetas[np.isfinite(self.thetas)]
        return float(finite.max()) if finite.size else 0.0


def point_mass_reconstruction(ch: LevyChannel, y: float) -> Reconstruction:
    """Optimal reconstruction when the input is known to equal ``y``."""
    theta = float(ch.link(y))
    return Reconstruction(theta, np.array([theta]), np.array([1.0]))


def _jump_integral(ch, f, tol, theta_max):
    nu = ch.triple.jump_measure
    if nu is None:
        return None
    if isinstance(nu, DiscreteJumpWeights):
        return nu.integrate(f, tol, theta_max=theta_max, log_weighted=True)
    return nu.integrate(f, tol, log_weighted=True)


def levy_loss(ch: LevyChannel, x: float, recon: Reconstruction,
              tol: float = 1e-10, full_output: bool = False):
    """Levy loss of input ``x`` against ``recon``.

    The jump-measure integral is computed numerically to absolute accuracy
    ``tol``.  With ``full_output=True`` a :class:`QuadResult` is returned.
    """
    theta = float(ch.link(x))
    sigma = ch.triple.volatility
    cont = sigma ** 2 * float(gauss_loss(theta, recon.r0)) if sigma > 0 else 0.0

    def f(z, log_mass):
        with np.errstate(invalid="ignore"):
            lu = np.where(np.isneginf(theta), -np.inf, theta * z)
        return poisson_loss_from_logs(lu, recon.log_rate(z), log_mass)

    tmax = max(theta if np.isfinite(theta) else 0.0, recon.theta_max)
    jump = _jump_integral(ch, f, tol, tmax)
    res = QuadResult(cont, 0.0, 0) if jump is None else QuadResult(
        cont + float(jump.value), jump.error_estimate, jump.evaluations)
    return res if full_output else float(res.value)


def representative_loss(ch: LevyChannel, x1, x2):
    """Levy loss at the point-mass reconstruction, in closed form.

    This is the Bregman divergence of the channel's convex conjugate:
    squared error for the Gaussian channel, the Poisson loss for the Poisson
    channel, the Itakura-Saito distance for the Gamma channel.
    """
    return ch.bregman(x1, x2)


def jump_loss_matrix(ch: LevyChannel, true_thetas, recon_thetas,
                     recon_logw, tol: float) -> QuadResult:
    """Jump part of the Levy loss for many inputs and reconstructions at once.

    Parameters
    ----------
    true_thetas : (m,) natural parameters of the inputs.
    recon_thetas : (n,) exponents of the reconstruction mixtures.
    recon_logw : (r, n) log mixture weights, one row per reconstruction.

    Returns a result whose value has shape ``(r, m)``.
    """
    true_thetas = np.asarray(true_thetas, dtype=float)
    recon_thetas = np.asarray(recon_thetas, dtype=float)
    recon_logw = np.atleast_2d(np.asarray(recon_logw, dtype=float))
    nrow, m = recon_logw.shape[0], true_thetas.size
    nu = ch.triple.jump_measure
    if nu is None:
        return QuadResult(np.zeros((nrow, m)), 0.0, 0)
    finite = np.concatenate([true_thetas, recon_thetas])
    finite = finite[np.isfinite(finite)]
    tmax = float(finite.max()) if finite.size else 0.0
    t_inf = np.isneginf(true_thetas)
    r_inf = np.isneginf(recon_thetas)

    def block_fn(logw):
        def f(z, log_mass):
            with np.errstate(invalid="ignore"):
                lu = np.where(t_inf[:, None], -np.inf,
                              true_thetas[:, None] * z[None, :])
                expo = np.where(r_inf[:, None], -np.inf,
                                recon_thetas[:, None] * z[None, :])
                lv = special.logsumexp(logw[:, :, None] + expo[None], axis=1)
            L = poisson_loss_from_logs(lu[None, :, :], lv[:, None, :],
                                       log_mass[None, None, :])
            return L.reshape(-1, z.size)
        return f

    if isinstance(nu, DiscreteJumpWeights) and nu.count is not None:
        blocks = [recon_logw]
    else:
        blocks = [recon_logw[i:i + _ROW_BLOCK]
                  for i in range(0, nrow, _ROW_BLOCK)]
    values, err, evals = [], 0.0, 0
    for logw in blocks:
        res = _jump_integral(ch, block_fn(logw), tol, tmax)
        values.append(np.asarray(res.value).reshape(logw.shape[0], m))
        err = max(err, res.error_estimate)
        evals += res.evaluations
    return QuadResult(np.concatenate(values, axis=0), err, evals)
