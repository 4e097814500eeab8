"""
What does it cost to decode with the wrong prior?

Inputs are drawn from P = (0.5, 0.5) on {1, 2}, but the decoder believes
Q = (0.8, 0.2).  The extra expected loss it pays, integrated over SNR,
reproduces the relative entropy between the two output laws.  A Monte
Carlo run checks the loss itself.
"""
from levy_channels import (DiscretePrior, check_dmle, expected_levy_loss,
                           get_channel, mc_expected_loss, mismatch_excess,
                           output_relative_entropy)

P = DiscretePrior([1.0, 2.0], [0.5, 0.5])
Q = DiscretePrior([1.0, 2.0], [0.8, 0.2])

for name in ["poisson", "negative-binomial"]:
    ch = get_channel(name)
    print(f"--- {name} ---")
    for gamma in [0.25, 1.0, 4.0]:
        matched = expected_levy_loss(ch, P, None, gamma).value
        wrong = expected_levy_loss(ch, P, Q, gamma).value
        excess = mismatch_excess(ch, P, Q, gamma).value
        d = output_relative_entropy(ch, P, Q, gamma).value
        print(f"gamma={gamma:5.2f}  matched={matched:.6f}  "
              f"mismatched={wrong:.6f}  excess={excess:.2e}  D={d:.6f}")
    r = check_dmle(ch, P, Q, 2.0)
    print("identity at gamma = 2:", r.line())
    mc = mc_expected_loss(ch, P, Q, 1.0, seed=7, n=50_000)
    exact = expected_levy_loss(ch, P, Q, 1.0).value
    print(f"Monte Carlo mismatched loss {mc.value:.5f} +/- {mc.std_error:.5f}"
          f" vs quadrature {exact:.5f} (z = {mc.z_score(exact):.2f})\n")

print("limit as gamma grows: D(P || Q) =", P.kl(Q))
