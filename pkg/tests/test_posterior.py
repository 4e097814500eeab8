import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levy_channels.channels import DomainError, get_channel
from levy_channels.losses import point_mass_reconstruction, representative_loss
from levy_channels.posterior import (DiscretePrior, InfiniteLossError,
                                     ZeroLikelihoodError, expected_levy_loss,
                                     expected_losses, mismatch_excess,
                                     optimal_reconstruction, posterior,
                                     pythagorean_terms, regularity_check)
from levy_channels.quadrature import DivergenceError

ALL = ["gaussian", "poisson", "gamma", "negative-binomial"]


def binary(name, w=(0.5, 0.5)):
    atoms = [-1.0, 1.0] if name == "gaussian" else [1.0, 2.0]
    return DiscretePrior(atoms, w)


# -- DiscretePrior ----------------------------------------------------------

def test_prior_validation():
    with pytest.raises(ValueError):
        DiscretePrior([2.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscretePrior([1.0, 1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        DiscretePrior([1.0, 2.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        DiscretePrior([1.0, 2.0], [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscretePrior([np.inf], [1.0])
    DiscretePrior([1.0, 2.0], [0.5, 0.5 + 5e-13])


def test_prior_helpers():
    p = DiscretePrior.from_pairs({2: 0.25, 1: 0.75})
    np.testing.assert_array_equal(p.atoms, [1.0, 2.0])
    np.testing.assert_array_equal(p.weights, [0.75, 0.25])
    assert DiscretePrior.point_mass(3.0).entropy() == 0
    assert abs(DiscretePrior.uniform([0, 1, 2, 3]).entropy()
               - math.log(4)) < 1e-15
    np.testing.assert_array_equal(p.on(np.array([0.0, 1.0, 2.0])),
                                  [0, 0.75, 0.25])
    q = DiscretePrior([1.0, 2.0], [0.9, 0.1])
    assert abs(DiscretePrior.uniform([1, 2]).kl(q) - 0.510825623765990) < 1e-14
    assert DiscretePrior.point_mass(3.0).kl(q) == np.inf
    assert p.to_dict() == {"atoms": [1.0, 2.0], "weights": [0.75, 0.25]}
    with pytest.raises(DomainError):
        DiscretePrior.uniform([-1, 1]).check_domain(get_channel("poisson"))


# -- posterior and reconstruction -------------------------------------------

def test_posterior_one_atom():
    w = posterior(get_channel("gamma"), DiscretePrior.point_mass(2.0), 1.0, 0.7)
    np.testing.assert_array_equal(w, [1.0])


def test_posterior_poisson_example():
    w = posterior(get_channel("poisson"), binary("poisson"), 1.0, 0)
    assert abs(w[0] - 0.731058578630005) < 1e-12
    assert abs(w.sum() - 1) < 1e-15


def test_posterior_gaussian_symmetry():
    w = posterior(get_channel("gaussian"), binary("gaussian"), 2.7, 0.0)
    np.testing.assert_allclose(w, [0.5, 0.5], rtol=0, atol=1e-15)


def test_posterior_zero_likelihood():
    with pytest.raises(ZeroLikelihoodError):
        posterior(get_channel("poisson"), DiscretePrior.point_mass(0.0), 1.0, 1)


def test_posterior_survives_large_snr():
    ch = get_channel("gaussian")
    res = posterior(ch, binary("gaussian"), 1e4, 1e4, full_output=True)
    assert res.weights[1] == 1.0 and res.weights[0] == 0.0
    assert list(res.dropped) == [0]
    assert res.deficit < 1e-300
    assert not res.significant_deficit


def test_reconstruction_examples():
    ch = get_channel("poisson")
    r = optimal_reconstruction(ch, binary("poisson"), 1.0, 0)
    assert abs(r.rate(np.array([1.0]))[0] - 1.268941421369995) < 1e-12
    g = get_channel("gaussian")
    assert optimal_reconstruction(g, binary("gaussian"), 1.0, 0.0).r0 == 0
    for name in ALL:
        ch = get_channel(name)
        c = 0.7 if name != "gaussian" else -0.4
        a = optimal_reconstruction(ch, DiscretePrior.point_mass(c), 1.3, 1.0)
        b = point_mass_reconstruction(ch, c)
        z = np.array([0.5, 2.0])
        assert a.r0 == b.r0
        np.testing.assert_allclose(a.rate(z), b.rate(z), rtol=1e-14)


# -- expected losses --------------------------------------------------------

@pytest.mark.parametrize("name", ALL)
def test_matched_point_mass_has_zero_loss(name):
    ch = get_channel(name)
    p = DiscretePrior.point_mass(1.5)
    assert expected_levy_loss(ch, p, None, 1.0).value == 0


def test_gaussian_small_snr_loss_is_half_variance():
    r = expected_levy_loss(get_channel("gaussian"), binary("gaussian"), None,
                           1e-3)
    assert abs(r.value - 0.5) < 0.01
    # 0.5 * mmse(gamma) ~ 0.5 * (1 - gamma) for small gamma
    assert abs(r.value - 0.5 * (1 - 1e-3)) < 1e-5


@settings(max_examples=25, deadline=None)
@given(name=st.sampled_from(ALL), u=st.floats(0.05, 0.95),
       v=st.floats(0.05, 0.95), gamma=st.floats(0.1, 5.0))
def test_point_mass_mismatch_reduces_to_bregman(name, u, v, gamma):
    ch = get_channel(name)
    if name == "gaussian":
        x1, x2 = 6 * u - 3, 6 * v - 3
    else:
        x1, x2 = 4 * u, 4 * v
    if x1 == x2:
        return
    P, Q = DiscretePrior.point_mass(x1), DiscretePrior.point_mass(x2)
    r = expected_levy_loss(ch, P, Q, gamma, tol=1e-9)
    assert abs(r.value - representative_loss(ch, x1, x2)) <= 1e-8


@pytest.mark.parametrize("name", ALL)
def test_mismatch_excess_nonnegative(name):
    ch = get_channel(name)
    P = binary(name)
    for Q in (binary(name, (0.8, 0.2)), binary(name, (0.2, 0.8))):
        for gamma in (0.3, 1.0, 3.0):
            r = mismatch_excess(ch, P, Q, gamma, 1e-8)
            assert r.value >= -r.error_estimate


def test_mismatch_excess_zero_when_matched():
    ch = get_channel("poisson")
    r = mismatch_excess(ch, binary("poisson"), binary("poisson"), 1.0)
    assert r.value == 0


def test_expected_losses_share_one_quadrature():
    ch = get_channel("negative-binomial")
    P, Q = binary(ch.name), binary(ch.name, (0.8, 0.2))
    both = expected_losses(ch, P, [P, Q], 1.0, 1e-9).value
    assert abs(both[0] - expected_levy_loss(ch, P, None, 1.0, 1e-9).value) < 1e-9
    assert abs(both[1] - expected_levy_loss(ch, P, Q, 1.0, 1e-9).value) < 1e-9


def test_infinite_loss_when_decoder_cannot_reconstruct():
    ch = get_channel("poisson")
    P = DiscretePrior.point_mass(1.0)
    Q = DiscretePrior.point_mass(0.0)
    with pytest.raises(InfiniteLossError):
        expected_levy_loss(ch, P, Q, 1.0)


def test_expected_loss_rejects_nonpositive_snr():
    with pytest.raises(DomainError):
        expected_levy_loss(get_channel("gamma"), binary("gamma"), None, 0.0)


# -- orthogonality ------------------------------------------------------------

@pytest.mark.parametrize("name", ALL)
@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_pythagorean_decompositions(name, gamma):
    ch = get_channel(name)
    P, Q = binary(name), binary(name, (0.8, 0.2))
    for z in (0.5, 1.0):
        terms = pythagorean_terms(ch, P, Q, gamma, z=z, tol=1e-10)
        for lhs, rhs, budget in terms.values():
            assert lhs > 0
            assert abs(lhs - rhs) <= budget + 1e-10


# -- regularity ---------------------------------------------------------------

def test_regularity_examples():
    r = regularity_check(get_channel("gaussian"), binary("gaussian"))
    assert r.second_moment == 1.0 and r.jump_moment is None and r.finite
    r = regularity_check(get_channel("poisson"), DiscretePrior.point_mass(0.0))
    assert r.second_moment is None
    assert float(r.jump_moment.value) == 0.0
    r = regularity_check(get_channel("gamma"), DiscretePrior.point_mass(2.0))
    assert abs(r.jump_moment.value - 1.0) < 1e-9


def test_regularity_nb_series():
    # phi'(2) = ln(4/3): sum_k t k (4/3)^k / (k 2^k) = t * sum (2/3)^k = 2t
    t = math.log(4 / 3)
    r = regularity_check(get_channel("negative-binomial"),
                         DiscretePrior.point_mass(2.0))
    assert abs(r.jump_moment.value - 2 * t) < 1e-11
    r = regularity_check(get_channel("negative-binomial"),
                         DiscretePrior.point_mass(1.0))
    assert r.jump_moment.value == 0.0


def test_regularity_boundary_pathology_is_divergence():
    # an atom with phi'(x) >= 1 makes the Gamma jump moment diverge; the
    # generic channel accepts such an atom only through the raw link
    ch = get_channel("gamma")
    with pytest.raises((DivergenceError, DomainError)):
        regularity_check(ch, DiscretePrior.point_mass(1e308))
