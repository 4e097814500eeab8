"""
Walk-through: Gaussian channel with a binary input.

For Y = gamma X + sqrt(gamma) N and X uniform on {-1, +1}, the slope of the
mutual information in the SNR equals half the minimum mean square error of
estimating X from Y.  We tabulate both sides, then watch the mutual
information climb towards ln 2 as the SNR grows.
"""
import numpy as np

from levy_channels import (DiscretePrior, expected_levy_loss, get_channel,
                           mi_derivative, mutual_information)

ch = get_channel("gaussian")
prior = DiscretePrior.uniform([-1.0, 1.0])
print(ch.describe())
print()

# Two independent numerical paths: a finite difference of I(gamma) and an
# output integral of the posterior loss.
print(f"{'gamma':>7} {'I':>10} {'dI/dgamma':>12} {'E loss':>12} {'gap':>9}")
for gamma in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0]:
    mi = mutual_information(ch, prior, gamma).value
    slope = mi_derivative(ch, prior, gamma).value
    loss = expected_levy_loss(ch, prior, None, gamma).value
    print(f"{gamma:7.2f} {mi:10.6f} {slope:12.8f} {loss:12.8f} "
          f"{abs(slope - loss):9.1e}")

# At low SNR the loss is half the input variance ...
print("\nloss at gamma = 1e-3:",
      expected_levy_loss(ch, prior, None, 1e-3).value)

# ... and at high SNR the information saturates at H(X) = ln 2.
for gamma in [10.0, 20.0, 50.0]:
    mi = mutual_information(ch, prior, gamma).value
    print(f"I at gamma = {gamma:4.0f}: {mi:.9f}  (ln 2 - I = "
          f"{np.log(2) - mi:.2e})")
