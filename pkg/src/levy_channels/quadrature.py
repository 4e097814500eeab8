"""
Numerical integration and summation with explicit error estimates.

Every routine here returns a :class:`QuadResult` rather than a bare number,
so that callers comparing two independently computed quantities can build a
tolerance budget out of the reported errors.

The 1-D workhorse is a globally adaptive Gauss-Kronrod (10/21 point) rule.
Integrands are called with a 1-D array of abscissae and may return either an
array of the same length or a 2-D array ``(m, n)`` holding ``m`` integrands
evaluated at once; the latter is how nested integrals are vectorised.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "QuadResult",
    "QuadratureError",
    "DivergenceError",
    "integrate_interval",
    "integrate_semi_infinite",
    "sum_series",
    "integrate_snr",
    "mixture_expectation",
    "expectation_over_output",
    "DEFAULT_MAX_EVALS",
]

DEFAULT_MAX_EVALS = 2**15

# Kronrod 21-point extension of the 10-point Gauss-Legendre rule on [-1, 1]
# (QUADPACK qk21 constants).  Only the non-negative half is listed.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525226081,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (xgk[1], xgk[3], ...).
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9]] = _WG
GAUSS_WEIGHTS[[19, 17, 15, 13, 11]] = _WG


class QuadratureError(RuntimeError):
    """Raised when an integral or series misses its tolerance.

    The best available estimate is attached as ``result``.
    """

    def __init__(self, message: str, result: "QuadResult | None" = None):
        super().__init__(message)
        self.result = result


class DivergenceError(ArithmeticError):
    """The quantity being computed is infinite (e.g. a non-decaying integrand
    on an unbounded SNR range)."""


@dataclass(frozen=True)
class QuadResult:
    """Value of a numerical integral or sum together with its error estimate.

    ``value`` is a float, or an array for vector-valued integrands.  The
    error estimate is a single non-negative number bounding every component.
    """

    value: float | np.ndarray
    error_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be non-negative")

    def __float__(self):
        return float(self.value)

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )


def _as_2d(values: np.ndarray, npts: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        values = np.full(npts, float(values))
    if values.ndim == 1:
        return values[None, :]
    return values.reshape(-1, npts)


def _gk_panels(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    fx = _as_2d(f(x), x.size).reshape(-1, a.size, 21)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError("integrand returned non-finite values")
    kron = (fx @ KRONROD_WEIGHTS) * half
    gauss = (fx @ GAUSS_WEIGHTS) * half
    err = np.max(np.abs(kron - gauss), axis=0)
    return kron, err


def integrate_interval(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float,
    *,
    rel_tol: float = 0.0,
    breakpoints: Sequence[float] = (),
    max_evals: int = DEFAULT_MAX_EVALS,
    strict: bool = True,
) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``(lo, hi)``.

    ``f`` is never evaluated at the end points, so integrable end-point
    singularities are acceptable.  Subdivision continues until the summed
    panel errors fall below ``max(tol, rel_tol * |value|)`` or the evaluation
    budget runs out.

    Parameters
    ----------
    f : callable
        Vectorised integrand; maps an array of abscissae of shape ``(n,)`` to
        ``(n,)`` or ``(m, n)``.
    lo, hi : float
        Finite integration limits, ``lo < hi``.
    tol : float
        Absolute error target (> 0).
    breakpoints : sequence of float
        Interior points where the integrand is known to be rough; used to
        seed the initial partition.
    strict : bool
        If true (default) a missed tolerance raises :class:`QuadratureError`;
        otherwise the result is returned with ``converged=False``.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ValueError(f"need finite lo < hi, got ({lo}, {hi})")
    if not tol > 0:
        raise ValueError("tol must be positive")

    edges = np.unique(np.concatenate(
        [[lo, hi], [p for p in breakpoints if lo < p < hi]]))
    a, b = edges[:-1], edges[1:]
    val, err = _gk_panels(f, a, b)
    evals = 21 * a.size
    scalar = val.shape[0] == 1

    converged = False
    while True:
        value = val.sum(axis=1)
        total = float(err.sum())
        target = max(tol, rel_tol * float(np.max(np.abs(value))))
        if total <= target:
            converged = True
            break
        width = b - a
        splittable = width > 64 * np.finfo(float).eps * np.maximum(
            np.abs(a), np.abs(b)) + 1e-300
        share = target / a.size
        sel = np.flatnonzero((err > share) & splittable)
        if sel.size == 0:
            break
        if sel.size > 256:
            sel = sel[np.argsort(err[sel])[-256:]]
        if evals + 42 * sel.size > max_evals:
            # spend what is left on the worst panels only
            room = (max_evals - evals) // 42
            if room <= 0:
                break
            sel = sel[np.argsort(err[sel])[-room:]]
        mid = 0.5 * (a[sel] + b[sel])
        na = np.concatenate([a[sel], mid])
        nb = np.concatenate([mid, b[sel]])
        nval, nerr = _gk_panels(f, na, nb)
        evals += 21 * na.size
        keep = np.ones(a.size, dtype=bool)
        keep[sel] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        val = np.concatenate([val[:, keep], nval], axis=1)
        err = np.concatenate([err[keep], nerr])

    value = val.sum(axis=1)
    result = QuadResult(float(value[0]) if scalar else value,
                        float(err.sum()), evals, converged)
    if not converged and strict:
        raise QuadratureError(
            f"integral over ({lo}, {hi}) did not reach tol={tol:g} "
            f"(error estimate {result.error_estimate:.3g} after {evals} "
            "evaluations)", result)
    return result


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    tol: float,
    *,
    breakpoints: Sequence[float] = (),
    **kwargs,
) -> QuadResult:
    """Integral of ``f`` over ``[lo, inf)`` through ``z = lo + t / (1 - t)``."""

    def g(t):
        s = 1.0 - t
        z = lo + t / s
        out = _as_2d(f(z), z.size) / (s * s)
        return out

    tb = [(p - lo) / (1.0 + p - lo) for p in breakpoints if p > lo]
    res = integrate_interval(g, 0.0, 1.0, tol, breakpoints=tb, **kwargs)
    value = res.value
    if np.ndim(value) == 1 and np.size(value) == 1:
        value = float(value[0])
    return QuadResult(value, res.error_estimate, res.evaluations,
                      res.converged)


def sum_series(
    term: Callable[[np.ndarray], np.ndarray],
    tail_bound: Callable[[int, np.ndarray], float],
    tol: float,
    *,
    start: int = 0,
    chunk: int = 64,
    max_terms: int = 10**6,
) -> QuadResult:
    """Sum ``term(k)`` for ``k = start, start+1, ...`` until the tail is small.

    ``term`` receives an integer array and returns ``(n,)`` or ``(m, n)``.
    ``tail_bound(K, last_terms)`` must return an upper bound on the absolute
    sum of all terms with index ``> K``; ``last_terms`` are the values of the
    most recent chunk.  Summation stops once the bound drops below ``tol/10``
    and the bound is reported as the error estimate.
    """
    total = None
    k0 = start
    n = 0
    scalar = False
    while n < max_terms:
        ks = np.arange(k0, k0 + chunk)
        t = np.asarray(term(ks), dtype=float)
        scalar = t.ndim == 1
        t = _as_2d(t, ks.size)
        if not np.all(np.isfinite(t)):
            raise QuadratureError("series term is not finite")
        part = t.sum(axis=1)
        total = part if total is None else total + part
        n += chunk
        k0 += chunk
        bound = float(tail_bound(int(ks[-1]), t))
        if bound < tol / 10:
            value = float(total[0]) if scalar else total
            return QuadResult(value, bound, n, True)
        chunk = min(2 * chunk, 4096)
    value = float(total[0]) if scalar else total
    raise QuadratureError(f"series not summed to tol={tol:g} within "
                          f"{max_terms} terms", QuadResult(value, np.inf, n,
                                                           False))


def geometric_tail(rate: float, factor: float = 2.0):
    """Tail bound for terms dominated by ``C * rate**k``.

    The constant is taken from the largest term of the last chunk, inflated
    by ``factor`` to absorb slowly varying prefactors.
    """
    if not 0 <= rate < 1:
        raise ValueError("geometric rate must lie in [0, 1)")

    def bound(K, last):
        return factor * float(np.max(np.abs(last[:, -1]))) * rate / (1 - rate)

    return bound


def _snr_nodes(lo, hi, decades=4):
    if lo == 0:
        return [hi * 10.0**-k for k in range(1, decades + 1)]
    if hi / lo > 10:
        return list(np.geomspace(lo, hi, int(np.log10(hi / lo)) + 2)[1:-1])
    return []


def _fit_exponential_tail(gs, hs):
    """Least-squares fit of ``log h = log c - rho * g``; returns (c, rho)."""
    slope, intercept = np.polyfit(gs, np.log(hs), 1)
    return np.exp(intercept), -slope


def integrate_snr(
    h: Callable[[float], float | np.ndarray],
    lo: float,
    hi: float,
    tol: float,
    *,
    start: float = 8.0,
    max_snr: float = 2.0**14,
    max_evals: int = 4000,
) -> QuadResult:
    """Integral of an SNR-indexed quantity ``h(alpha)`` over ``[lo, hi]``.

    ``h`` is typically expensive (each call is an expected loss), so it is
    called one SNR value at a time.  The initial partition is log-spaced
    towards ``lo``.  ``hi = inf`` is handled by integrating up to a growing
    cut-off and extrapolating the remainder with an exponential fit to the
    last octave of integrand samples; a non-decaying integrand raises
    :class:`DivergenceError`.
    """
    def hv(gs):
        out = [np.atleast_1d(np.asarray(h(float(g)), dtype=float)) for g in gs]
        return np.stack(out, axis=1)

    if np.isfinite(hi):
        return integrate_interval(hv, lo, hi, tol,
                                  breakpoints=_snr_nodes(lo, hi),
                                  max_evals=max_evals)

    cut = max(start, lo + 1.0)
    res = integrate_interval(hv, lo, cut, tol / 4,
                             breakpoints=_snr_nodes(lo, cut),
                             max_evals=max_evals)
    while True:
        gs = cut * np.array([0.5, 0.625, 0.75, 0.875, 1.0])
        hs = np.abs(hv(gs)).max(axis=0)
        evals = res.evaluations + gs.size
        res = QuadResult(res.value, res.error_estimate, evals, True)
        scalar = np.ndim(res.value) == 0
        if hs[-1] <= 1e-300 or hs[-1] * cut < tol * 1e-6:
            return res
        if hs[-1] >= hs[0] * (1 - 1e-6):
            if cut >= 16 * start or hs[-1] >= hs[0]:
                raise DivergenceError(
                    f"integrand does not decay on [{gs[0]:g}, {gs[-1]:g}] "
                    f"(h = {hs[-1]:.6g}); the integral over [0, inf) is "
                    "infinite")
        elif np.all(hs > 0):
            c, rho = _fit_exponential_tail(gs, hs)
            if rho > 0:
                tail_fit = c * np.exp(-rho * cut) / rho
                rho2 = np.log(hs[-2] / hs[-1]) / (gs[-1] - gs[-2])
                tail_2pt = hs[-1] / rho2 if rho2 > 0 else np.inf
                tail_err = max(abs(tail_fit - tail_2pt), 0.05 * tail_fit)
                if tail_fit + tail_err < tol / 2:
                    hlast = hv([cut])[:, 0]
                    sign_tail = tail_fit * np.sign(hlast)
                    value = res.value + (float(sign_tail[0]) if scalar
                                         else sign_tail)
                    return QuadResult(value, res.error_estimate + tail_err,
                                      evals + 1, True)
        if 2 * cut > max_snr:
            raise QuadratureError(
                "tail fit failed: integrand still significant at SNR "
                f"{cut:g} (h = {hs[-1]:.3g})", res)
        piece = integrate_interval(hv, cut, 2 * cut, tol / 4,
                                   max_evals=max_evals)
        res = res + piece
        cut *= 2


# ---------------------------------------------------------------------------
# Expectations over the output of a channel
# ---------------------------------------------------------------------------

def _mixture_terms(law, atoms, logp, g, y, log_y=None, log_jac=0.0):
    L = law.loglik(atoms, y, log_y)
    lmix = logsumexp(L + logp[None, :], axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        dens = np.exp(lmix + log_jac)
        vals = _as_2d(g(y, L, lmix), y.size)
        out = np.where(dens[None, :] > 0, vals * dens[None, :], 0.0)
    return out, dens


def mixture_expectation(law, atoms, weights, g, tol: float, *,
                        max_evals: int = DEFAULT_MAX_EVALS) -> QuadResult:
    """Expectation of ``g`` under the output mixture ``sum_i p_i f(y | x_i)``.

    ``law`` is a channel bound to an SNR (see ``LevyChannel.at``) or any
    object with the same ``discrete``/``loglik``/``segments`` interface.
    ``g(y, L, lmix)`` receives the outputs, the log-likelihood matrix
    ``L[j, i] = log f(y_j | x_i)`` and the log mixture density, and returns
    ``(ny,)`` or ``(m, ny)`` values; it must be bounded wherever the
    mixture has mass.  Passing ``L`` lets callers form posteriors without
    recomputing likelihoods.

    Continuous outputs are integrated over a window outside which every
    conditional density carries less than ``1e-30`` of its mass.  Integer
    outputs are summed upwards from 0 until the accumulated mass exceeds
    ``1 - eps`` and the current terms are below ``eps`` with
    ``eps = tol * 1e-3``; the neglected mass times the largest ``|g|`` seen
    in the last block is added to the error estimate.
    """
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(weights)
    if law.discrete:
        return _sum_integer_outputs(law, atoms, logp, g, tol)

    total = None
    for seg in law.segments(atoms):
        if seg.power == 1.0:
            def h(y):
                return _mixture_terms(law, atoms, logp, g, y)[0]
            res = integrate_interval(h, seg.lo, seg.hi, tol,
                                     breakpoints=seg.breakpoints,
                                     max_evals=max_evals)
        else:
            pw = seg.power

            def h(s, pw=pw):
                log_s = np.log(s)
                log_y = log_s / pw
                log_jac = -np.log(pw) + (1.0 / pw - 1.0) * log_s
                return _mixture_terms(law, atoms, logp, g, np.exp(log_y),
                                      log_y, log_jac)[0]
            bps = [b ** pw for b in seg.breakpoints]
            res = integrate_interval(h, seg.lo, seg.hi, tol, breakpoints=bps,
                                     max_evals=max_evals)
        total = res if total is None else total + res
    return total


def _sum_integer_outputs(law, atoms, logp, g, tol, max_outputs=10**7):
    eps = max(tol * 1e-3, 1e-300)
    start, chunk = 0, 64
    acc = None
    mass = 0.0
    while start < max_outputs:
        y = np.arange(start, start + chunk, dtype=float)
        vals, dens = _mixture_terms(law, atoms, logp, g, y)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("summand is not finite")
        part = vals.sum(axis=1)
        acc = part if acc is None else acc + part
        mass += float(dens.sum())
        start += chunk
        if mass >= 1.0 - eps and dens[-1] < eps:
            with np.errstate(invalid="ignore", divide="ignore"):
                gmax = np.max(np.abs(np.where(dens > 0, vals / dens, 0.0)))
            err = max(1.0 - mass, 0.0) * float(gmax) + eps * float(gmax)
            value = float(acc[0]) if acc.size == 1 else acc
            return QuadResult(value, err, start)
        chunk = min(2 * chunk, 8192)
    raise QuadratureError(f"output sum did not settle within {max_outputs} "
                          "terms")


def expectation_over_output(ch, gamma: float, prior, g, tol: float,
                            **kwargs) -> QuadResult:
    """``E[g(Y)]`` when ``X ~ prior`` and ``Y`` is the output of ``ch`` at SNR
    ``gamma``.

    ``prior`` is anything with ``atoms`` and ``weights`` attributes.  Unlike
    :func:`mixture_expectation`, ``g`` here is a plain function of ``y``.
    """
    return mixture_expectation(ch.at(gamma), prior.atoms, prior.weights,
                               lambda y, L, lmix: g(y), tol, **kwargs)
