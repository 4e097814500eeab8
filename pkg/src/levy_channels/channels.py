"""
Scalar Levy channels.

A channel is specified by the cumulant transform ``kappa`` of an infinitely
divisible law (the unit-SNR output with no input).  At SNR ``gamma`` the
no-input output has cumulant ``gamma * kappa`` and an input ``x`` tilts this
law exponentially with natural parameter ``theta = phi'(x)``, where ``phi``
is the convex conjugate of ``kappa``:

    f_gamma(y | x) = exp(theta * y - gamma * kappa(theta)) * f_gamma(y | no input)

so that ``E[Y | x] = gamma * x``.

Four closed-form channels are provided (Gaussian, Poisson, Gamma, Negative
Binomial) together with :class:`GenericLevyChannel`, which only needs
``kappa``, its natural-parameter domain and the no-input law.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import optimize, special

from .quadrature import (QuadResult, integrate_interval,
                         integrate_semi_infinite, sum_series)

__all__ = [
    "DomainError",
    "Interval",
    "ContinuousJumpDensity",
    "DiscreteJumpWeights",
    "LevyTriple",
    "LevyChannel",
    "GaussianChannel",
    "PoissonChannel",
    "GammaChannel",
    "NegativeBinomialChannel",
    "GenericLevyChannel",
    "AmplifiedGammaLaw",
    "Segment",
    "cumulant",
    "dual",
    "link",
    "cond_law",
    "base_law",
    "make_gamma_amplified",
    "get_channel",
    "CHANNELS",
]

LN2 = math.log(2.0)
# tail probability used to size the output window of continuous channels
WINDOW_EPS = 1e-30


class DomainError(ValueError):
    """An argument lies outside the domain of a channel quantity."""


@dataclass(frozen=True)
class Interval:
    """Interval of the real line with optional closed ends."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        above = v >= self.lo if self.lo_closed else v > self.lo
        below = v <= self.hi if self.hi_closed else v < self.hi
        return above & below

    def check(self, v, what: str):
        if not np.all(self.contains(v)):
            raise DomainError(f"{what}={v!r} outside {self}")

    def __str__(self):
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo:g}, {self.hi:g}{right}"


# ---------------------------------------------------------------------------
# Levy characteristics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContinuousJumpDensity:
    """Jump measure ``nu(dz) = density(z) dz`` on an open interval."""

    density: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    label: str = ""
    scale: float = 1.0
    log_density: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, z):
        return self.scale * self.density(z)

    def log_mass(self, z):
        if self.log_density is not None:
            return self.log_density(z) + math.log(self.scale)
        with np.errstate(divide="ignore"):
            return np.log(self(z))

    def scaled(self, factor: float) -> "ContinuousJumpDensity":
        return dataclasses.replace(self, scale=self.scale * factor)

    def integrate(self, f, tol: float, log_weighted: bool = False,
                  **kwargs) -> QuadResult:
        """``int f(z) nu(dz)``; ``f`` may be vector valued.

        With ``log_weighted=True`` the integrand is called as
        ``f(z, log_mass)`` and must fold the measure in itself, which lets
        callers avoid ``inf * 0`` in the far tail.  The support is split at
        ``+-1`` so the behaviour near the origin and the tail are integrated
        separately.
        """
        lo, hi = self.support
        if lo < 0 < hi:
            raise ValueError("support must not contain 0; split it")

        def g(z):
            if log_weighted:
                return f(z, self.log_mass(z))
            return f(z) * self(z)

        pieces = []
        if lo >= 0:
            cut = 1.0 if lo < 1.0 < hi else None
            if cut is None:
                pieces.append(_integrate_range(g, lo, hi, tol, **kwargs))
            else:
                pieces.append(_integrate_range(g, lo, cut, tol / 2, **kwargs))
                pieces.append(_integrate_range(g, cut, hi, tol / 2, **kwargs))
        else:
            def gm(u):
                return g(-u)
            mlo, mhi = -hi, -lo
            cut = 1.0 if mlo < 1.0 < mhi else None
            if cut is None:
                pieces.append(_integrate_range(gm, mlo, mhi, tol, **kwargs))
            else:
                pieces.append(_integrate_range(gm, mlo, cut, tol / 2, **kwargs))
                pieces.append(_integrate_range(gm, cut, mhi, tol / 2, **kwargs))
        total = pieces[0]
        for p in pieces[1:]:
            total = total + p
        return total


def _integrate_range(g, lo, hi, tol, **kwargs):
    if np.isfinite(hi):
        return integrate_interval(g, lo, hi, tol, **kwargs)
    return integrate_semi_infinite(g, lo, tol, **kwargs)


@dataclass(frozen=True)
class DiscreteJumpWeights:
    """Jump measure with atoms ``z_k`` and masses ``m_k``, ``k = 1, 2, ...``.

    ``count`` is ``None`` for infinitely many atoms, in which case ``rate``
    must map the largest natural parameter ``theta`` in play to a ratio
    ``rho < 1`` with ``exp(theta * z_k) * m_k = O(rho**k)``.
    """

    atom: Callable[[np.ndarray], np.ndarray]
    weight: Callable[[np.ndarray], np.ndarray]
    count: Optional[int] = None
    rate: Optional[Callable[[float], float]] = None
    label: str = ""
    scale: float = 1.0

    def scaled(self, factor: float) -> "DiscreteJumpWeights":
        return dataclasses.replace(self, scale=self.scale * factor)

    def masses(self, k):
        return self.scale * self.weight(k)

    def integrate(self, f, tol: float, theta_max: float = 0.0,
                  log_weighted: bool = False) -> QuadResult:
        """``sum_k f(z_k) m_k``; ``f`` may be vector valued.

        ``log_weighted`` has the same meaning as for
        :meth:`ContinuousJumpDensity.integrate`.
        """
        def weighted(k):
            z = self.atom(k)
            m = self.masses(k)
            if log_weighted:
                return np.asarray(f(z, np.log(m)), dtype=float)
            return np.asarray(f(z), dtype=float) * m

        if self.count is not None:
            k = np.arange(1, self.count + 1)
            vals = weighted(k)
            return QuadResult(vals.sum(axis=-1), 0.0, int(self.count))
        rho = self.rate(theta_max)
        if not rho < 1:
            raise DomainError(f"jump series diverges (ratio {rho:g})")

        def tail(K, last):
            # terms are O(k * rho**k); bound the tail by a geometric series
            # started from the largest last term with a (k+1)/k allowance
            big = float(np.max(np.abs(last[:, -1])))
            r = rho * (K + 2) / (K + 1)
            if r >= 1:
                return np.inf
            return 2.0 * big * r / (1 - r)

        return sum_series(weighted, tail, tol, start=1)


JumpMeasure = Union[ContinuousJumpDensity, DiscreteJumpWeights, None]


@dataclass(frozen=True)
class LevyTriple:
    """Levy characteristics ``(a, sigma, nu)`` of the no-input output."""

    drift: float
    volatility: float
    jump_measure: JumpMeasure = None

    def __post_init__(self):
        if not self.volatility >= 0:
            raise DomainError("volatility must be non-negative")

    def scaled_jumps(self, factor: float) -> "LevyTriple":
        if self.jump_measure is None:
            return self
        return dataclasses.replace(
            self, jump_measure=self.jump_measure.scaled(factor))

    def small_jump_integral(self, tol: float = 1e-10) -> QuadResult:
        """``int min(1, z^2) nu(dz)``, finite for every Levy measure."""
        nu = self.jump_measure
        if nu is None:
            return QuadResult(0.0, 0.0, 0)

        def f(z):
            return np.minimum(1.0, np.asarray(z, dtype=float) ** 2)

        if isinstance(nu, DiscreteJumpWeights):
            return nu.integrate(f, tol, theta_max=0.0)
        return nu.integrate(f, tol)


# ---------------------------------------------------------------------------
# Output-quadrature plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Piece of a continuous output range integrated in ``s = y**power``."""

    lo: float
    hi: float
    breakpoints: tuple = ()
    power: float = 1.0


def _gamma_segments(shape: float, scales: np.ndarray) -> list[Segment]:
    hi = float(np.max(scales)) * special.gammainccinv(shape, WINDOW_EPS)
    if shape < 1:
        # y**shape removes the y**(shape-1) singularity at the origin
        return [Segment(0.0, hi ** shape, (), shape)]
    bps = tuple(sorted({float(s) * shape for s in scales if s * shape < hi}))
    return [Segment(0.0, hi, bps, 1.0)]


class _BoundLaw:
    """Conditional output law of a channel at a fixed SNR.

    This is the object the output-expectation routines work with: it
    supplies the log-likelihood matrix of a finite set of inputs and a plan
    for the output quadrature.
    """

    def __init__(self, channel: "LevyChannel", gamma: float):
        self.channel = channel
        self.gamma = gamma
        self.discrete = channel.output_kind == "integer"

    def loglik(self, atoms, y, log_y=None):
        atoms = np.asarray(atoms, dtype=float)
        y = np.asarray(y, dtype=float)
        ly = None if log_y is None else np.asarray(log_y)[:, None]
        return self.channel._log_cond(atoms[None, :], self.gamma, y[:, None],
                                      log_y=ly)

    def segments(self, atoms):
        return self.channel._segments(np.asarray(atoms, dtype=float),
                                      self.gamma)


# ---------------------------------------------------------------------------
# Channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyChannel:
    """Base class; concrete channels override the closed-form pieces."""

    name: str
    triple: LevyTriple
    theta_domain: Interval
    input_domain: Interval
    output_kind: str  # "continuous" or "integer"

    # -- cumulant side -----------------------------------------------------
    def kappa(self, theta):
        raise NotImplementedError

    def dkappa(self, theta):
        raise NotImplementedError

    def d2kappa(self, theta):
        raise NotImplementedError

    # -- mean side ---------------------------------------------------------
    def phi(self, x):
        raise NotImplementedError

    def dphi(self, x):
        raise NotImplementedError

    @property
    def no_input(self) -> float:
        """Input value ``kappa'(0)`` equivalent to sending nothing."""
        return float(self.dkappa(0.0))

    def cumulant(self, theta):
        self.theta_domain.check(theta, "theta")
        return self.kappa(np.asarray(theta, dtype=float))

    def dual(self, x):
        self.input_domain.check(x, "x")
        return self.phi(np.asarray(x, dtype=float))

    def link(self, x):
        self.input_domain.check(x, "x")
        return self.dphi(np.asarray(x, dtype=float))

    def bregman(self, x1, x2):
        """``phi(x1) - phi(x2) - phi'(x2) (x1 - x2)``."""
        self.input_domain.check(x1, "x1")
        self.input_domain.check(x2, "x2")
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        with np.errstate(invalid="ignore"):
            lin = np.where(x1 == x2, 0.0, self.dphi(x2) * (x1 - x2))
        return self.phi(x1) - self.phi(x2) - lin

    # -- output laws -------------------------------------------------------
    def _log_cond(self, x, gamma, y, log_y=None):
        raise NotImplementedError

    def _check_output(self, y):
        y = np.asarray(y, dtype=float)
        if self.output_kind == "integer":
            if np.any((y < 0) | (y != np.floor(y))):
                raise DomainError(f"output {y!r} not a non-negative integer")
        return y

    def log_cond_law(self, x, gamma, y):
        if not gamma > 0:
            raise DomainError("gamma must be positive")
        self.input_domain.check(x, "x")
        y = self._check_output(y)
        return self._log_cond(np.asarray(x, dtype=float), gamma, y)

    def cond_law(self, x, gamma, y):
        """Density (or pmf) of the output at ``y`` given input ``x``."""
        return np.exp(self.log_cond_law(x, gamma, y))

    def base_law(self, gamma, y):
        """Output density with no input (``theta = 0``)."""
        return self.cond_law(self.no_input, gamma, y)

    def tilted_law(self, x, gamma, y):
        """``exp(theta y - gamma kappa(theta)) * base_law(y)``.

        Computed from the no-input law alone, so comparing it with
        :meth:`cond_law` checks the exponential-tilt structure.  The
        convention ``0 * (-inf) = 0`` covers boundary inputs such as
        ``x = 0`` for the Poisson channel.
        """
        self.input_domain.check(x, "x")
        y = self._check_output(y)
        theta = self.dphi(np.asarray(x, dtype=float))
        with np.errstate(invalid="ignore", divide="ignore"):
            ty = np.where(y == 0, 0.0, theta * y)
            kt = self.kappa(theta)
        return np.exp(ty - gamma * kt + self._log_cond(
            np.asarray(self.no_input), gamma, y))

    def at(self, gamma: float) -> _BoundLaw:
        if not gamma > 0:
            raise DomainError("gamma must be positive")
        return _BoundLaw(self, gamma)

    def _segments(self, atoms, gamma):
        raise NotImplementedError

    def sample(self, x, gamma, size, rng: np.random.Generator):
        raise NotImplementedError

    # -- misc --------------------------------------------------------------
    def with_triple(self, triple: LevyTriple) -> "LevyChannel":
        """Copy with different Levy characteristics but the same output law.

        Only the loss functions read the triple, so this is how deliberately
        broken losses are produced for mutation tests.
        """
        return dataclasses.replace(self, triple=triple)

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianChannel(LevyChannel):
    """``Y | X ~ N(gamma X, gamma)``."""

    name: str = "gaussian"
    triple: LevyTriple = LevyTriple(0.0, 1.0, None)
    theta_domain: Interval = Interval(-np.inf, np.inf)
    input_domain: Interval = Interval(-np.inf, np.inf)
    output_kind: str = "continuous"

    def kappa(self, theta):
        return 0.5 * np.square(theta)

    def dkappa(self, theta):
        return np.asarray(theta, dtype=float) * 1.0

    def d2kappa(self, theta):
        return np.ones_like(np.asarray(theta, dtype=float))

    def phi(self, x):
        return 0.5 * np.square(x)

    def dphi(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def _log_cond(self, x, gamma, y, log_y=None):
        return (-np.square(y - gamma * x) / (2 * gamma)
                - 0.5 * np.log(2 * np.pi * gamma))

    def _segments(self, atoms, gamma):
        sd = math.sqrt(gamma)
        means = gamma * atoms
        return [Segment(float(means.min()) - 12 * sd,
                        float(means.max()) + 12 * sd,
                        tuple(sorted(set(means.tolist()))))]

    def sample(self, x, gamma, size, rng):
        return gamma * x + math.sqrt(gamma) * rng.standard_normal(size)

    def describe(self):
        return "\n".join([
            "channel: gaussian",
            "  law: Y | X ~ N(gamma*X, gamma)",
            "  kappa(theta) = theta^2 / 2,  theta in (-inf, inf)",
            "  phi(x) = x^2 / 2,  link theta = x",
            "  input domain: (-inf, inf);  no-input point x = 0",
            "  Levy triple: a = 0, sigma = 1, nu = 0 (no jumps)",
        ])


@dataclass(frozen=True)
class PoissonChannel(LevyChannel):
    """``Y | X ~ Poisson(gamma X)``; zero input is allowed."""

    name: str = "poisson"
    triple: LevyTriple = LevyTriple(1.0, 0.0, DiscreteJumpWeights(
        atom=lambda k: np.ones_like(k, dtype=float),
        weight=lambda k: np.ones_like(k, dtype=float),
        count=1, label="delta_1"))
    theta_domain: Interval = Interval(-np.inf, np.inf)
    input_domain: Interval = Interval(0.0, np.inf, lo_closed=True)
    output_kind: str = "integer"

    def kappa(self, theta):
        return np.expm1(theta)

    def dkappa(self, theta):
        return np.exp(theta)

    def d2kappa(self, theta):
        return np.exp(theta)

    def phi(self, x):
        return special.xlogy(x, x) - x + 1.0

    def dphi(self, x):
        with np.errstate(divide="ignore"):
            return np.log(x)

    def _log_cond(self, x, gamma, y, log_y=None):
        mu = gamma * x
        return special.xlogy(y, mu) - mu - special.gammaln(y + 1)

    def sample(self, x, gamma, size, rng):
        return rng.poisson(gamma * x, size).astype(float)

    def describe(self):
        return "\n".join([
            "channel: poisson",
            "  law: Y | X ~ Poisson(gamma*X)",
            "  kappa(theta) = exp(theta) - 1,  theta in (-inf, inf)",
            "  phi(x) = x ln x - x + 1,  link theta = ln x",
            "  input domain: [0, inf);  no-input point x = 1",
            "  Levy triple: a = 1, sigma = 0, nu = delta_1 (unit jumps)",
        ])


def _gamma_jump_density(z):
    return np.exp(-z) / z


def _gamma_jump_log_density(z):
    return -z - np.log(z)


@dataclass(frozen=True)
class GammaChannel(LevyChannel):
    """``Y | X ~ Gamma(shape=gamma, scale=X)``."""

    name: str = "gamma"
    triple: LevyTriple = LevyTriple(1.0 - math.exp(-1.0), 0.0,
                                    ContinuousJumpDensity(
                                        _gamma_jump_density, (0.0, np.inf),
                                        label="z^-1 exp(-z) dz, z > 0",
                                        log_density=_gamma_jump_log_density))
    theta_domain: Interval = Interval(-np.inf, 1.0)
    input_domain: Interval = Interval(0.0, np.inf)
    output_kind: str = "continuous"

    def kappa(self, theta):
        return -np.log1p(-np.asarray(theta, dtype=float))

    def dkappa(self, theta):
        return 1.0 / (1.0 - np.asarray(theta, dtype=float))

    def d2kappa(self, theta):
        return 1.0 / np.square(1.0 - np.asarray(theta, dtype=float))

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return x - 1.0 - np.log(x)

    def dphi(self, x):
        return 1.0 - 1.0 / np.asarray(x, dtype=float)

    def bregman(self, x1, x2):
        self.input_domain.check(x1, "x1")
        self.input_domain.check(x2, "x2")
        r = np.asarray(x1, dtype=float) / np.asarray(x2, dtype=float)
        return r - np.log(r) - 1.0

    def _log_cond(self, x, gamma, y, log_y=None):
        if log_y is None:
            with np.errstate(divide="ignore"):
                log_y = np.log(y)
        return ((gamma - 1.0) * log_y - y / x - gamma * np.log(x)
                - special.gammaln(gamma))

    def _check_output(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise DomainError("Gamma channel outputs are positive")
        return y

    def _segments(self, atoms, gamma):
        return _gamma_segments(gamma, atoms)

    def sample(self, x, gamma, size, rng):
        return rng.gamma(gamma, x, size)

    def describe(self):
        return "\n".join([
            "channel: gamma",
            "  law: Y | X ~ Gamma(shape=gamma, scale=X)",
            "  kappa(theta) = -ln(1 - theta),  theta in (-inf, 1)",
            "  phi(x) = x - 1 - ln x,  link theta = 1 - 1/x",
            "  input domain: (0, inf);  no-input point x = 1",
            "  Levy triple: a = 1 - e^-1, sigma = 0, "
            "nu(dz) = z^-1 e^-z dz on z > 0",
        ])


@dataclass(frozen=True)
class NegativeBinomialChannel(LevyChannel):
    """``Y | X ~ NB(gamma, X / (1 + X))`` (mean ``gamma X``)."""

    name: str = "negative-binomial"
    triple: LevyTriple = LevyTriple(0.0, 0.0, DiscreteJumpWeights(
        atom=lambda k: np.asarray(k, dtype=float),
        weight=lambda k: 1.0 / (k * np.exp2(k)),
        count=None,
        rate=lambda theta_max: max(math.exp(theta_max), 1.0) / 2.0,
        label="nu(k) = 1 / (k 2^k), k = 1, 2, ..."))
    theta_domain: Interval = Interval(-np.inf, LN2)
    input_domain: Interval = Interval(0.0, np.inf, lo_closed=True)
    output_kind: str = "integer"

    def kappa(self, theta):
        return -np.log(2.0 - np.exp(theta))

    def dkappa(self, theta):
        e = np.exp(theta)
        return e / (2.0 - e)

    def d2kappa(self, theta):
        e = np.exp(theta)
        return 2.0 * e / np.square(2.0 - e)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return special.xlogy(x, x) - (1 + x) * np.log1p(x) + (x + 1) * LN2

    def dphi(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return LN2 + np.log(x) - np.log1p(x)

    def bregman(self, x1, x2):
        self.input_domain.check(x1, "x1")
        self.input_domain.check(x2, "x2")
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        with np.errstate(divide="ignore"):
            return (special.xlogy(x1, x1) - special.xlogy(x1, x2)
                    + (1 + x1) * (np.log1p(x2) - np.log1p(x1)))

    def _log_cond(self, x, gamma, y, log_y=None):
        return (special.gammaln(y + gamma) - special.gammaln(gamma)
                - special.gammaln(y + 1) + special.xlogy(y, x)
                - (y + gamma) * np.log1p(x))

    def sample(self, x, gamma, size, rng):
        # Gamma-Poisson mixture; keeps E[Y] = gamma * x
        if x == 0:
            return np.zeros(size)
        lam = rng.gamma(gamma, x, size)
        return rng.poisson(lam).astype(float)

    def describe(self):
        return "\n".join([
            "channel: negative-binomial",
            "  law: Y | X ~ NB(gamma, X/(1+X))",
            "  kappa(theta) = ln((1/2) / (1 - e^theta / 2)),  "
            "theta in (-inf, ln 2)",
            "  phi(x) = x ln x - (1+x) ln(1+x) + x ln 2 + ln 2,  "
            "link theta = ln(2x/(1+x))",
            "  input domain: [0, inf);  no-input point x = 1",
            "  Levy triple: sigma = 0, nu(k) = 1/(k 2^k), k = 1, 2, ...",
        ])


@dataclass(frozen=True)
class GenericLevyChannel(LevyChannel):
    """Levy channel built from a user supplied cumulant.

    Parameters
    ----------
    kappa_fn : callable
        Unit-SNR cumulant transform, ``kappa(0) = 0``, strictly convex.
    log_base_fn : callable
        ``(gamma, y) -> log f_gamma(y | no input)``.
    dkappa_fn, d2kappa_fn : callable, optional
        Derivatives of ``kappa``; central differences are used otherwise.

    ``phi`` and ``phi'`` are obtained by inverting ``kappa'`` numerically.
    """

    name: str = "generic"
    triple: LevyTriple = LevyTriple(0.0, 0.0, None)
    theta_domain: Interval = Interval(-np.inf, np.inf)
    input_domain: Interval = Interval(-np.inf, np.inf)
    output_kind: str = "continuous"
    kappa_fn: Callable = None
    log_base_fn: Callable = None
    dkappa_fn: Optional[Callable] = None
    d2kappa_fn: Optional[Callable] = None
    output_support: Interval = Interval(-np.inf, np.inf)
    sampler: Optional[Callable] = field(default=None, compare=False)

    def kappa(self, theta):
        return np.vectorize(self.kappa_fn, otypes=[float])(theta)

    def _step(self, theta):
        return 1e-4 * max(1.0, abs(theta))

    def dkappa(self, theta):
        if self.dkappa_fn is not None:
            return np.vectorize(self.dkappa_fn, otypes=[float])(theta)

        def d(t):
            h = self._step(t)
            k = self.kappa_fn
            return (8 * (k(t + h) - k(t - h)) - (k(t + 2 * h) - k(t - 2 * h))) / (12 * h)

        return np.vectorize(d, otypes=[float])(theta)

    def d2kappa(self, theta):
        if self.d2kappa_fn is not None:
            return np.vectorize(self.d2kappa_fn, otypes=[float])(theta)

        def d2(t):
            h = self._step(t)
            k = self.kappa_fn
            return (k(t + h) - 2 * k(t) + k(t - h)) / (h * h)

        return np.vectorize(d2, otypes=[float])(theta)

    def _invert(self, x):
        lo_dom, hi_dom = self.theta_domain.lo, self.theta_domain.hi

        def g(t):
            return float(self.dkappa(t)) - x

        # bracket by stepping outwards, staying inside the open domain
        a, b = -1.0, 1.0
        if np.isfinite(hi_dom):
            b = min(b, hi_dom - 1e-3 * (1 + abs(hi_dom)))
        if np.isfinite(lo_dom):
            a = max(a, lo_dom + 1e-3 * (1 + abs(lo_dom)))
        for _ in range(200):
            if g(a) <= 0:
                break
            a = a * 2 if not np.isfinite(lo_dom) else 0.5 * (a + lo_dom)
        for _ in range(200):
            if g(b) >= 0:
                break
            b = b * 2 if not np.isfinite(hi_dom) else 0.5 * (b + hi_dom)
        if not g(a) <= 0 <= g(b):
            raise DomainError(f"cannot invert kappa' at x={x}")
        return optimize.brentq(g, a, b, xtol=1e-14, rtol=1e-14, maxiter=500)

    def dphi(self, x):
        return np.vectorize(self._invert, otypes=[float])(x)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        theta = self.dphi(x)
        return theta * x - self.kappa(theta)

    def _log_cond(self, x, gamma, y, log_y=None):
        theta = self.dphi(x)
        return theta * y - gamma * self.kappa(theta) + self.log_base_fn(gamma, y)

    def _check_output(self, y):
        y = super()._check_output(y)
        self.output_support.check(y, "y")
        return y

    def _segments(self, atoms, gamma):
        theta = self.dphi(atoms)
        mean = gamma * atoms
        sd = np.sqrt(gamma * self.d2kappa(theta))
        lo = max(float(np.min(mean - 14 * sd)), self.output_support.lo)
        hi = min(float(np.max(mean + 14 * sd)), self.output_support.hi)
        return [Segment(lo, hi, tuple(sorted(set(mean.tolist()))))]

    def sample(self, x, gamma, size, rng):
        if self.sampler is None:
            raise NotImplementedError("no sampler supplied for this channel")
        return self.sampler(x, gamma, size, rng)

    def describe(self):
        return "\n".join([
            f"channel: {self.name} (generic)",
            f"  theta domain: {self.theta_domain}",
            f"  input domain: {self.input_domain}",
            f"  Levy triple: a = {self.triple.drift:g}, "
            f"sigma = {self.triple.volatility:g}",
        ])


# ---------------------------------------------------------------------------
# Input-amplification parametrisation of the Gamma law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmplifiedGammaLaw:
    """``Y | X ~ Gamma(shape=k, scale=a X / k)``.

    Not a Levy channel in ``a``: the amplification only rescales the
    output, so information measures do not depend on ``a`` at all.
    """

    k: float
    a: float
    discrete: bool = False

    def __post_init__(self):
        if not (self.k > 0 and self.a > 0):
            raise DomainError("shape k and amplification a must be positive")

    def log_cond_law(self, x, y, log_y=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(x <= 0):
            raise DomainError("inputs must be positive")
        scale = self.a * x / self.k
        if log_y is None:
            with np.errstate(divide="ignore"):
                log_y = np.log(y)
        return ((self.k - 1) * log_y - y / scale - self.k * np.log(scale)
                - special.gammaln(self.k))

    def cond_law(self, x, y):
        return np.exp(self.log_cond_law(x, y))

    def mean(self, x):
        return self.a * np.asarray(x, dtype=float)

    def loglik(self, atoms, y, log_y=None):
        atoms = np.asarray(atoms, dtype=float)
        ly = None if log_y is None else np.asarray(log_y)[:, None]
        return self.log_cond_law(atoms[None, :], np.asarray(y)[:, None],
                                 log_y=ly)

    def segments(self, atoms):
        return _gamma_segments(self.k, self.a * np.asarray(atoms) / self.k)

    def sample(self, x, size, rng):
        return rng.gamma(self.k, self.a * x / self.k, size)


def make_gamma_amplified(k: float, a: float) -> AmplifiedGammaLaw:
    return AmplifiedGammaLaw(float(k), float(a))


# ---------------------------------------------------------------------------
# Functional interface
# ---------------------------------------------------------------------------

CHANNELS = {
    "gaussian": GaussianChannel,
    "poisson": PoissonChannel,
    "gamma": GammaChannel,
    "negative-binomial": NegativeBinomialChannel,
}
_ALIASES = {"nb": "negative-binomial", "negbin": "negative-binomial",
            "negative_binomial": "negative-binomial", "normal": "gaussian"}


def get_channel(name: str) -> LevyChannel:
    key = _ALIASES.get(name.lower(), name.lower())
    try:
        return CHANNELS[key]()
    except KeyError:
        raise ValueError(f"unknown channel {name!r}; choose from "
                         f"{sorted(CHANNELS)}") from None


def cumulant(ch: LevyChannel, theta):
    return ch.cumulant(theta)


def dual(ch: LevyChannel, x):
    return ch.dual(x)


def link(ch: LevyChannel, x):
    return ch.link(x)


def cond_law(ch: LevyChannel, x, gamma, y):
    return ch.cond_law(x, gamma, y)


def base_law(ch: LevyChannel, gamma, y):
    return ch.base_law(gamma, y)
