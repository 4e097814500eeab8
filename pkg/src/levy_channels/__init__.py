"""
Scalar Levy channels, their natural loss functions and numerical checks of
the identities linking information measures to estimation losses.

Submodules
----------
channels      channel models (Gaussian, Poisson, Gamma, Negative Binomial,
              generic) and their output laws
losses        Gaussian, Poisson and Levy losses; Bregman form
quadrature    adaptive integration with error estimates
posterior     finite-support priors, posteriors, expected losses
information   mutual information, relative entropy, SNR integrals
identities    falsifiable identity checks and suites
montecarlo    seeded Monte Carlo cross-checks
cli           command-line entry point
"""
from .channels import (CHANNELS, AmplifiedGammaLaw, ContinuousJumpDensity,
                       DiscreteJumpWeights, DomainError, GammaChannel,
                       GaussianChannel, GenericLevyChannel, Interval,
                       LevyChannel, LevyTriple, NegativeBinomialChannel,
                       PoissonChannel, base_law, cond_law, cumulant, dual,
                       get_channel, link, make_gamma_amplified)
from .identities import (IdentityReport, Mutation, check_bregman,
                         check_cond_mean, check_dmle, check_entropy,
                         check_esscher, check_fenchel,
                         check_gamma_amp_invariance, check_immle,
                         check_pythagorean, check_relent, default_battery,
                         run_suite)
from .information import (AbsoluteContinuityError, InfoCurve,
                          entropy_via_loss_integral, mi_derivative,
                          mutual_information, output_relative_entropy,
                          relative_entropy_via_loss_integral)
from .losses import (Reconstruction, gauss_loss, levy_loss,
                     point_mass_reconstruction, poisson_loss,
                     representative_loss)
from .montecarlo import (McEstimate, mc_expected_loss, mc_mutual_information,
                         sample_output)
from .posterior import (DiscretePrior, InfiniteLossError, ZeroLikelihoodError,
                        expected_levy_loss, mismatch_excess,
                        optimal_reconstruction, posterior, regularity_check)
from .quadrature import (DivergenceError, QuadratureError, QuadResult,
                         expectation_over_output, integrate_interval,
                         integrate_semi_infinite, integrate_snr, sum_series)

__version__ = "0.1.0"
