"""
The representative losses of the Gamma and Negative Binomial channels.

For a point-mass input both losses reduce to a Bregman divergence: the
Itakura-Saito distance for the Gamma channel and a log-ratio form for the
Negative Binomial channel.  We evaluate the jump-measure integral directly
and compare it with the closed forms, then print the two curves
l(1, x) that the ``bregman-curve`` command exports.
"""
import numpy as np

from levy_channels import (get_channel, levy_loss, point_mass_reconstruction,
                           representative_loss)

for name, x_ref in [("gamma", 1.0), ("negative-binomial", 1.0)]:
    ch = get_channel(name)
    print(f"--- {name}: l(x_ref = {x_ref}, x) ---")
    print(f"{'x':>6} {'integral':>14} {'closed form':>14}")
    for x in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0]:
        rec = point_mass_reconstruction(ch, x)
        via_nu = levy_loss(ch, x_ref, rec, tol=1e-12)
        closed = float(representative_loss(ch, x_ref, x))
        print(f"{x:6.2f} {via_nu:14.10f} {closed:14.10f}")
    print()

# The Itakura-Saito curve is asymmetric: under-estimating is punished much
# harder than over-estimating by the same factor.
g = get_channel("gamma")
for f in [2.0, 10.0]:
    lo = float(representative_loss(g, 1.0, 1 / f))
    hi = float(representative_loss(g, 1.0, f))
    print(f"factor {f:4.0f}: x = 1/{f:g} costs {lo:.4f}, x = {f:g} costs "
          f"{hi:.4f}")

x = np.geomspace(0.05, 5, 9)
print("\nNB curve:", np.round(representative_loss(get_channel(
    "negative-binomial"), 1.0, x), 5))
