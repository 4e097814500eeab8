"""
Acceptance criteria, each run at its stated tolerance.

Every test records a single PASS/FAIL line (printed, and repeated in the
pytest terminal summary) before asserting.
"""
import math
import time

import numpy as np

from levy_channels.channels import get_channel
from levy_channels.identities import (Mutation, check_bregman,
                                      check_cond_mean, check_dmle,
                                      check_entropy, check_esscher,
                                      check_fenchel,
                                      check_gamma_amp_invariance, check_immle,
                                      check_pythagorean, check_relent)
from levy_channels.information import (mi_curve, mutual_information,
                                       relent_curve)
from levy_channels.montecarlo import mc_expected_loss, mc_mutual_information
from levy_channels.posterior import DiscretePrior, expected_levy_loss

CHANNELS = ["gaussian", "poisson", "gamma", "negative-binomial"]
LN2 = math.log(2)


def binary(name, w=(0.5, 0.5)):
    atoms = [-1.0, 1.0] if name == "gaussian" else [1.0, 2.0]
    return DiscretePrior(atoms, w)


def test_criterion_1_immle(criterion):
    t0 = time.perf_counter()
    bad, worst = [], 0.0
    for name in CHANNELS:
        limit = 1e-4 if name in ("gaussian", "poisson") else 1e-3
        for gamma in (0.5, 1.0, 2.0):
            r = check_immle(get_channel(name), binary(name), gamma)
            worst = max(worst, r.abs_gap)
            if not (r.passed and r.abs_gap <= limit):
                bad.append((name, gamma, r.abs_gap))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed <= 60
    criterion("1 I-MMLE", ok, f"max gap {worst:.2e}, {elapsed:.1f} s")
    assert ok, bad


def test_criterion_2_dmle(criterion):
    t0 = time.perf_counter()
    bad, worst = [], 0.0
    for name in CHANNELS:
        for gamma in (0.5, 2.0):
            r = check_dmle(get_channel(name), binary(name),
                           binary(name, (0.8, 0.2)), gamma)
            worst = max(worst, r.abs_gap)
            if not (r.passed and r.abs_gap <= 1e-3):
                bad.append((name, gamma, r.abs_gap))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed <= 300
    criterion("2 D-MLE", ok, f"max gap {worst:.2e}, {elapsed:.1f} s")
    assert ok, bad


def test_criterion_3_entropy(criterion):
    cases = [("gaussian", binary("gaussian")), ("poisson", binary("poisson")),
             ("poisson", DiscretePrior([0.0, 3.0], [0.5, 0.5]))]
    rel = []
    for name, prior in cases:
        r = check_entropy(get_channel(name), prior)
        rel.append(abs(r.lhs - LN2) / LN2 if r.passed else np.inf)
    ok = max(rel) <= 0.01
    criterion("3 entropy representation", ok,
              f"max relative error {max(rel):.2e}")
    assert ok, rel


def test_criterion_4_relative_entropy(criterion):
    target = 0.510826
    rel = []
    for name in ("poisson", "gamma"):
        r = check_relent(get_channel(name), binary(name),
                         binary(name, (0.9, 0.1)))
        rel.append(abs(r.lhs - target) / target if r.passed else np.inf)
    ok = max(rel) <= 0.01
    criterion("4 relative-entropy representation", ok,
              f"max relative error {max(rel):.2e}")
    assert ok, rel


def test_criterion_5_bregman(criterion):
    cases = [("gamma", 2.0, 1.0, 1 - LN2, 1e-6),
             ("negative-binomial", 1.0, 2.0, 0.117783, 1e-6),
             ("gaussian", 3.0, 1.0, 2.0, 1e-10),
             ("poisson", 2.0, 1.0, 2 * LN2 - 1, 1e-10)]
    bad = []
    for name, x1, x2, value, tol in cases:
        collapse, deriv = check_bregman(get_channel(name), x1, x2)
        if not (collapse.passed and abs(collapse.lhs - value) <= tol):
            bad.append((name, "collapse", collapse.lhs - value))
        if not (deriv.passed and abs(deriv.lhs - collapse.rhs) <= 1e-4):
            bad.append((name, "snr-derivative", deriv.lhs - collapse.rhs))
    ok = not bad
    criterion("5 Bregman collapse", ok)
    assert ok, bad


def test_criterion_6_gamma_amplification(criterion):
    spreads = []
    for k in (1.0, 2.0):
        r = check_gamma_amp_invariance(k, binary("gamma"), binary("gamma"),
                                       binary("gamma", (0.9, 0.1)),
                                       (0.5, 1.0, 2.0, 4.0), tol=1e-6)
        spreads.append(r.lhs if r.passed else np.inf)
    ok = max(spreads) < 1e-6
    criterion("6 Gamma amplification invariance", ok,
              f"max spread {max(spreads):.2e}")
    assert ok


def test_criterion_7_structural(criterion):
    bad = []
    for name, x, gamma in (("gaussian", 1.0, 2.0), ("poisson", 0.0, 1.0),
                           ("poisson", 2.0, 1.5), ("gamma", 2.0, 0.5),
                           ("negative-binomial", 1.5, 2.0)):
        r = check_esscher(get_channel(name), x, gamma)
        if not (r.passed and r.lhs <= 1e-10):
            bad.append(("esscher", name, r.lhs))
    grid = [0.1, 0.3, 1.0, 3.0, 10.0]
    for name in CHANNELS:
        ch = get_channel(name)
        r = check_fenchel(ch)
        if not (r.passed and r.lhs <= 1e-12):
            bad.append(("fenchel", name, r.lhs))
        x = 0.5 if name == "gaussian" else 1.5
        for r in check_cond_mean(ch, x, 0.7):
            if not r.passed:
                bad.append(("moments", name, r.abs_gap))
        P, Q = binary(name), binary(name, (0.8, 0.2))
        for r in check_pythagorean(ch, P, Q, 1.0, 0.7):
            if not r.passed:
                bad.append(("pythagorean", name, r.abs_gap))
        mi = mi_curve(ch, P, grid)
        if not (mi.is_nondecreasing() and mi.bounded_by(P.entropy())):
            bad.append(("mi curve", name, mi.values))
        d = relent_curve(ch, P, Q, grid)
        if not (d.is_nondecreasing() and d.bounded_by(P.kl(Q))):
            bad.append(("relent curve", name, d.values))
    ok = not bad
    criterion("7 structural invariants", ok)
    assert ok, bad


def test_criterion_8_monte_carlo(criterion):
    n = 100_000
    z = {}
    for i, name in enumerate(CHANNELS):
        ch, P = get_channel(name), binary(name)
        mi = mc_mutual_information(ch, P, 1.0, 1000 + i, n)
        z[name, "mi"] = mi.z_score(mutual_information(ch, P, 1.0).value)
        loss = mc_expected_loss(ch, P, P, 1.0, 2000 + i, n)
        z[name, "loss"] = loss.z_score(
            expected_levy_loss(ch, P, None, 1.0).value)
    worst = max(z.values())
    ok = worst < 3
    criterion("8 Monte Carlo cross-validation", ok,
              f"max |z| {worst:.2f}")
    assert ok, z


def test_criterion_9_mutation(criterion):
    missed = []
    # the unmutated checks pass, so any failure below is due to the mutation
    for name in CHANNELS:
        assert check_immle(get_channel(name), binary(name), 1.0).passed
    cases = [("gaussian", Mutation("drop-sigma")),
             ("gamma", Mutation("scale-nu", 1.01)),
             ("negative-binomial", Mutation("scale-nu", 1.01))]
    for name in CHANNELS:
        for kind in ("scale-lhs", "scale-rhs"):
            cases.append((name, Mutation(kind, 1.01)))
    for name, mutation in cases:
        r = check_immle(get_channel(name), binary(name), 1.0,
                        mutation=mutation)
        if r.passed:
            missed.append((name, mutation.kind))
    ok = not missed
    criterion("9 mutation sensitivity", ok,
              f"{len(cases) - len(missed)}/{len(cases)} mutations detected")
    assert ok, missed
