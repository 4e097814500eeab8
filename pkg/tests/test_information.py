import math

import numpy as np
import pytest
from scipy import integrate, stats

from levy_channels.channels import get_channel
from levy_channels.information import (AbsoluteContinuityError, InfoCurve,
                                       StepUnderflowError,
                                       entropy_via_loss_integral,
                                       mi_curve, mi_derivative,
                                       mutual_information,
                                       output_relative_entropy,
                                       relative_entropy_via_loss_integral,
                                       relent_curve, relent_derivative)
from levy_channels.posterior import DiscretePrior, expected_levy_loss
from levy_channels.quadrature import DivergenceError

ALL = ["gaussian", "poisson", "gamma", "negative-binomial"]
LN2 = math.log(2)


def binary(name, w=(0.5, 0.5)):
    atoms = [-1.0, 1.0] if name == "gaussian" else [1.0, 2.0]
    return DiscretePrior(atoms, w)


def test_gaussian_binary_mi_against_quadpack():
    # independent oracle: I = ln 2 - E ln(1 + exp(-2 gamma - 2 sqrt(gamma) N))
    gamma = 1.0
    f = lambda n: stats.norm.pdf(n) * np.logaddexp(
        0.0, -2 * gamma - 2 * math.sqrt(gamma) * n)
    ref = LN2 - integrate.quad(f, -np.inf, np.inf, epsabs=1e-14)[0]
    got = mutual_information(get_channel("gaussian"), binary("gaussian"),
                             gamma).value
    assert abs(got - ref) < 1e-10


def test_poisson_binary_mi_against_direct_sum():
    gamma, atoms = 1.0, np.array([1.0, 2.0])
    y = np.arange(0, 200)
    f = stats.poisson.pmf(y[:, None], gamma * atoms[None, :])
    fp = f.mean(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(f > 0, f * np.log(f / fp[:, None]), 0.0)
    ref = 0.5 * terms.sum()
    got = mutual_information(get_channel("poisson"), binary("poisson"),
                             gamma).value
    assert abs(got - ref) < 1e-12


def test_relative_entropy_against_direct_sum():
    ch = get_channel("negative-binomial")
    P, Q = binary(ch.name), binary(ch.name, (0.8, 0.2))
    gamma = 2.0
    y = np.arange(0, 1000)
    f = np.stack([stats.nbinom.pmf(y, gamma, 1 / (1 + x)) for x in (1, 2)],
                 axis=1)
    fp, fq = f @ P.weights, f @ Q.weights
    ref = np.sum(np.where(fp > 0, fp * np.log(fp / fq), 0.0))
    got = output_relative_entropy(ch, P, Q, gamma).value
    assert abs(got - ref) < 1e-12


@pytest.mark.parametrize("name", ALL)
def test_zero_cases(name):
    ch = get_channel(name)
    P = binary(name)
    assert mutual_information(ch, P, 0.0).value == 0
    assert output_relative_entropy(ch, P, binary(name, (0.8, 0.2)),
                                   0.0).value == 0
    assert mutual_information(ch, DiscretePrior.point_mass(1.0), 2.0).value == 0
    assert abs(output_relative_entropy(ch, P, P, 1.5).value) < 1e-15
    assert mi_derivative(ch, DiscretePrior.point_mass(1.0), 1.0).value == 0


def test_mi_approaches_entropy_at_high_snr():
    v = mutual_information(get_channel("gaussian"), binary("gaussian"),
                           50.0).value
    assert v < LN2 and LN2 - v < 1e-3


def test_mi_derivative_small_snr():
    d = mi_derivative(get_channel("gaussian"), binary("gaussian"), 1e-3)
    assert abs(d.value - 0.5) < 0.01
    e = expected_levy_loss(get_channel("gaussian"), binary("gaussian"), None,
                           1e-3)
    assert abs(d.value - e.value) < 1e-6


def test_step_underflow():
    with pytest.raises(StepUnderflowError):
        mi_derivative(get_channel("gaussian"), binary("gaussian"), 5e-4)


@pytest.mark.parametrize("name, x1, x2", [("gaussian", 3.0, 1.0),
                                          ("poisson", 2.0, 1.0),
                                          ("gamma", 2.0, 1.0),
                                          ("negative-binomial", 1.0, 2.0)])
def test_relent_slope_of_point_masses_is_bregman(name, x1, x2):
    ch = get_channel(name)
    d = relent_derivative(ch, DiscretePrior.point_mass(x1),
                          DiscretePrior.point_mass(x2), 1.3, 1e-8)
    assert abs(d.value - ch.bregman(x1, x2)) < 1e-6


def test_output_relent_absolute_continuity_failure():
    ch = get_channel("poisson")
    P = DiscretePrior.point_mass(1.0)
    Q = DiscretePrior.point_mass(0.0)
    with pytest.raises(AbsoluteContinuityError):
        output_relative_entropy(ch, P, Q, 1.0)


@pytest.mark.parametrize("name", ALL)
def test_curves_monotone_and_bounded(name):
    ch = get_channel(name)
    P, Q = binary(name), binary(name, (0.8, 0.2))
    grid = [0.1, 0.3, 1.0, 3.0, 10.0]
    mi = mi_curve(ch, P, grid)
    assert mi.is_nondecreasing() and mi.bounded_by(P.entropy())
    assert np.all(np.diff(mi.values) > 0)
    d = relent_curve(ch, P, Q, grid)
    assert d.is_nondecreasing() and d.bounded_by(P.kl(Q))
    assert d.values[0] > 0


def test_infocurve_validation():
    with pytest.raises(ValueError):
        InfoCurve([1.0, 1.0], [0, 0], [0, 0])
    c = InfoCurve([1.0, 2.0], [0.5, 0.4], [0.0, 0.0])
    assert not c.is_nondecreasing()
    assert c.is_nondecreasing(slack=0.2)
    assert not c.bounded_by(0.45)


# -- SNR-integral representations -------------------------------------------

def test_entropy_integral_point_mass():
    r = entropy_via_loss_integral(get_channel("gamma"),
                                  DiscretePrior.point_mass(2.0))
    assert r.value == 0


@pytest.mark.parametrize("name", ["gaussian", "poisson"])
def test_entropy_integral_binary(name):
    r = entropy_via_loss_integral(get_channel(name), binary(name))
    assert abs(r.value - LN2) < 1e-4


def test_entropy_integral_poisson_skewed():
    P = DiscretePrior([1.0, 2.0], [0.25, 0.75])
    r = entropy_via_loss_integral(get_channel("poisson"), P)
    assert abs(r.value - 0.562335144618808) < 1e-4


def test_relent_integral_poisson():
    P, Q = binary("poisson"), binary("poisson", (0.9, 0.1))
    r = relative_entropy_via_loss_integral(get_channel("poisson"), P, Q)
    assert abs(r.value - 0.510825623765990) < 1e-4
    assert relative_entropy_via_loss_integral(get_channel("poisson"), P,
                                              P).value == 0


def test_relent_integral_rejects_support_mismatch():
    ch = get_channel("gaussian")
    P, Q = DiscretePrior.point_mass(1.0), DiscretePrior.point_mass(-1.0)
    with pytest.raises(AbsoluteContinuityError):
        relative_entropy_via_loss_integral(ch, P, Q)


def test_relent_integral_detects_constant_integrand():
    # D(delta_x1 || delta_x2) is infinite: the integrand is the constant
    # Bregman divergence and must be reported as divergent
    ch = get_channel("gaussian")
    P, Q = DiscretePrior.point_mass(1.0), DiscretePrior.point_mass(-1.0)
    with pytest.raises(DivergenceError):
        relative_entropy_via_loss_integral(ch, P, Q, check_support=False,
                                           max_snr=2.0**8)
