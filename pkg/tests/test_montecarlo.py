import numpy as np
import pytest
from scipy import stats

from levy_channels.channels import DomainError, get_channel
from levy_channels.information import mutual_information
from levy_channels.montecarlo import (GENERATOR, McEstimate, mc_expected_loss,
                                      mc_mutual_information, sample_joint,
                                      sample_output)
from levy_channels.posterior import (DiscretePrior, expected_levy_loss,
                                     posterior)

ALL = ["gaussian", "poisson", "gamma", "negative-binomial"]
N = 100_000


def binary(name, w=(0.5, 0.5)):
    atoms = [-1.0, 1.0] if name == "gaussian" else [1.0, 2.0]
    return DiscretePrior(atoms, w)


def test_estimate_from_samples():
    e = McEstimate.from_samples([1.0, 2.0, 3.0], seed=5)
    assert e.value == 2.0 and e.n == 3 and e.seed == 5
    assert abs(e.std_error - 1 / np.sqrt(3)) < 1e-15
    assert e.generator == GENERATOR == "PCG64"
    assert e.z_score(2.0) == 0
    assert McEstimate(1.0, 0.0, 1, 0).z_score(2.0) == np.inf


@pytest.mark.parametrize("name", ALL)
def test_output_moments(name):
    ch = get_channel(name)
    x, gamma = (0.7, 1.3) if name == "gaussian" else (1.5, 1.3)
    y = sample_output(ch, x, gamma, 11, N)
    mean = gamma * x
    assert abs(y.mean() - mean) < 4 * y.std(ddof=1) / np.sqrt(N)
    var = gamma * float(ch.d2kappa(ch.link(x)))
    sq = (y - mean) ** 2
    assert abs(sq.mean() - var) < 4 * sq.std(ddof=1) / np.sqrt(N)


@pytest.mark.parametrize("name, ref", [
    ("gaussian", lambda g: stats.norm(0, np.sqrt(g))),
    ("gamma", lambda g: stats.gamma(g))])
def test_no_input_law_continuous(name, ref):
    ch = get_channel(name)
    x0 = float(ch.dkappa(0.0))
    y = sample_output(ch, x0, 0.8, 3, N)
    assert stats.kstest(y, ref(0.8).cdf).pvalue > 1e-3


@pytest.mark.parametrize("name, pmf", [
    ("poisson", lambda k, g: stats.poisson.pmf(k, g)),
    ("negative-binomial", lambda k, g: stats.nbinom.pmf(k, g, 0.5))])
def test_no_input_law_integer(name, pmf):
    ch = get_channel(name)
    x0 = float(ch.dkappa(0.0))
    gamma = 0.8
    y = sample_output(ch, x0, gamma, 3, N).astype(int)
    k = np.arange(0, 12)
    counts = np.array([np.sum(y == i) for i in k] + [np.sum(y >= 12)])
    p = np.append(pmf(k, gamma), 1 - pmf(k, gamma).sum())
    keep = p * N > 5
    chi2 = np.sum((counts[keep] - N * p[keep]) ** 2 / (N * p[keep]))
    assert stats.chi2.sf(chi2, keep.sum() - 1) > 1e-3


def test_sample_domain_errors():
    with pytest.raises(DomainError):
        sample_output(get_channel("gamma"), -1.0, 1.0, 0, 10)
    with pytest.raises(ValueError):
        sample_output(get_channel("gamma"), 1.0, 0.0, 0, 10)


def test_seed_determinism():
    ch = get_channel("negative-binomial")
    a = sample_joint(ch, binary(ch.name), 1.0, 42, 1000)
    b = sample_joint(ch, binary(ch.name), 1.0, 42, 1000)
    c = sample_joint(ch, binary(ch.name), 1.0, 43, 1000)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert not np.array_equal(a[1], c[1])
    e1 = mc_mutual_information(ch, binary(ch.name), 1.0, 7, 2000)
    e2 = mc_mutual_information(ch, binary(ch.name), 1.0, 7, 2000)
    assert e1 == e2


def test_point_mass_estimates_are_zero():
    ch = get_channel("gamma")
    p = DiscretePrior.point_mass(2.0)
    assert mc_mutual_information(ch, p, 1.0, 1, 100).value == 0
    assert mc_expected_loss(ch, p, p, 1.0, 1, 100).value == 0


@pytest.mark.parametrize("name", ["gaussian", "negative-binomial"])
def test_mc_mi_agrees_with_quadrature(name):
    ch = get_channel(name)
    gamma = 1.0 if name == "gaussian" else 2.0
    q = mutual_information(ch, binary(name), gamma).value
    e = mc_mutual_information(ch, binary(name), gamma, 2024, N)
    assert e.z_score(q) < 3


@pytest.mark.parametrize("name", ["gaussian", "poisson"])
def test_mc_loss_agrees_with_quadrature(name):
    ch = get_channel(name)
    P, Q = binary(name), binary(name, (0.8, 0.2))
    for dec in (P, Q):
        q = expected_levy_loss(ch, P, dec, 1.0).value
        e = mc_expected_loss(ch, P, dec, 1.0, 99, N)
        assert e.z_score(q) < 3


def test_posterior_concentrates_with_snr():
    ch = get_channel("poisson")
    prior = binary("poisson")
    means = []
    for gamma in (1.0, 10.0, 100.0):
        idx, y = sample_joint(ch, prior, gamma, 5, 2000)
        w = np.array([posterior(ch, prior, gamma, v)[i]
                      for i, v in zip(idx, y)])
        means.append(w.mean())
    assert means[0] < means[1] < means[2]
    assert means[2] > 0.999
