"""
Falsifiable numerical checks of the information-estimation identities.

Each ``check_*`` function computes the two sides of one identity by
independent numerical paths and returns :class:`IdentityReport` records.  A
check passes when

    |lhs - rhs| <= error_budget + slack * tol

where ``error_budget`` is the sum of the error estimates of every integral,
series and finite difference that went into either side.  The slack term
absorbs truncation errors that the estimates do not see; its multiplier is
stored in the report.

Mutations deliberately break one side (drop the Brownian term of the loss,
rescale the jump measure, or scale a side by a constant) and are used to
show that the checks can fail.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .channels import LevyChannel, get_channel, make_gamma_amplified
from .information import (_Tracked, entropy_via_loss_integral,
                          law_mutual_information, law_relative_entropy,
                          mi_derivative, output_relative_entropy,
                          relative_entropy_via_loss_integral,
                          relent_derivative)
from .losses import levy_loss, point_mass_reconstruction
from .posterior import (DiscretePrior, expected_levy_loss, mismatch_excess,
                        pythagorean_terms, regularity_check)
from .quadrature import expectation_over_output, integrate_snr

__all__ = [
    "IDENTITY_IDS",
    "IdentityReport",
    "Mutation",
    "MUTATIONS",
    "check_immle",
    "check_dmle",
    "check_entropy",
    "check_relent",
    "check_bregman",
    "check_gamma_amp_invariance",
    "check_esscher",
    "check_fenchel",
    "check_cond_mean",
    "check_pythagorean",
    "run_check",
    "run_suite",
    "default_battery",
]

IDENTITY_IDS = ("IMMLE", "DMLE", "ENTROPY", "RELENT", "BREGMAN_COLLAPSE",
                "BREGMAN_SNR_DERIV", "GAMMA_AMP_INVARIANCE", "ESSCHER",
                "PYTHAGOREAN", "FENCHEL", "COND_MEAN")

DEFAULT_SLACK = 10.0


def _jsonable(obj):
    if isinstance(obj, DiscretePrior):
        return obj.to_dict()
    if isinstance(obj, LevyChannel):
        return obj.name
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one identity check."""

    identity_id: str
    lhs: float
    rhs: float
    abs_gap: float
    error_budget: float
    slack: float
    tol: float
    passed: bool
    config: dict = field(default_factory=dict)
    notes: str = ""

    @classmethod
    def build(cls, identity_id, lhs, rhs, error_budget, tol, config,
              slack=DEFAULT_SLACK, notes="", passed=None):
        if identity_id not in IDENTITY_IDS:
            raise ValueError(f"unknown identity {identity_id!r}")
        lhs, rhs = float(lhs), float(rhs)
        gap = abs(lhs - rhs)
        if math.isnan(gap):
            gap = math.inf
        ok = gap <= error_budget + slack * tol
        if passed is not None:
            ok = ok and passed
        return cls(identity_id, lhs, rhs, gap, float(error_budget),
                   float(slack), float(tol), bool(ok), _jsonable(config),
                   notes)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.config, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config_hash"] = self.config_hash
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.identity_id:<21} gap={self.abs_gap:.3e} "
                f"budget={self.error_budget:.3e}+{self.slack:g}*{self.tol:g} "
                f"{json.dumps(self.config, sort_keys=True)}")


# ---------------------------------------------------------------------------
# Mutations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mutation:
    """A deliberate corruption applied to one side of a check.

    ``kind`` is one of ``"drop-sigma"`` (remove the Brownian term of the
    loss), ``"scale-nu"`` (multiply the jump measure used by the loss by
    ``factor``), ``"scale-lhs"`` or ``"scale-rhs"`` (multiply that side by
    ``factor``).
    """

    kind: str
    factor: float = 1.01

    def __post_init__(self):
        if self.kind not in MUTATIONS:
            raise ValueError(f"unknown mutation {self.kind!r}; choose from "
                             f"{sorted(MUTATIONS)}")

    def loss_channel(self, ch: LevyChannel) -> LevyChannel:
        if self.kind == "drop-sigma":
            t = ch.triple
            return ch.with_triple(type(t)(t.drift, 0.0, t.jump_measure))
        if self.kind == "scale-nu":
            return ch.with_triple(ch.triple.scaled_jumps(self.factor))
        return ch

    def sides(self, lhs, rhs):
        if self.kind == "scale-lhs":
            return lhs * self.factor, rhs
        if self.kind == "scale-rhs":
            return lhs, rhs * self.factor
        return lhs, rhs


MUTATIONS = ("drop-sigma", "scale-nu", "scale-lhs", "scale-rhs")


def _loss_ch(ch, mutation):
    return ch if mutation is None else mutation.loss_channel(ch)


def _sides(lhs, rhs, mutation):
    return (lhs, rhs) if mutation is None else mutation.sides(lhs, rhs)


def _mut_cfg(cfg, mutation):
    if mutation is not None:
        cfg = dict(cfg, mutation={"kind": mutation.kind,
                                  "factor": mutation.factor})
    return cfg


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_immle(ch: LevyChannel, prior: DiscretePrior, gamma: float,
                tol: float = 1e-6, *, slack: float = DEFAULT_SLACK,
                mutation: Optional[Mutation] = None) -> IdentityReport:
    """SNR derivative of the mutual information against the minimum mean
    Levy loss."""
    reg = regularity_check(ch, prior)
    lhs = mi_derivative(ch, prior, gamma, tol)
    rhs = expected_levy_loss(_loss_ch(ch, mutation), prior, None, gamma,
                             tol / 10)
    lv, rv = _sides(lhs.value, rhs.value, mutation)
    cfg = _mut_cfg({"channel": ch.name, "prior": prior, "gamma": gamma,
                    "tol": tol}, mutation)
    return IdentityReport.build(
        "IMMLE", lv, rv, lhs.error_estimate + rhs.error_estimate, tol, cfg,
        slack, notes=f"regularity finite: {reg.finite}")


def check_dmle(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
               gamma: float, tol: float = 1e-6, *,
               slack: float = DEFAULT_SLACK,
               mutation: Optional[Mutation] = None) -> IdentityReport:
    """Output relative entropy against the SNR-integrated cost of mismatch."""
    lhs = output_relative_entropy(ch, P, Q, gamma, tol * 1e-3)
    lch = _loss_ch(ch, mutation)
    h = _Tracked(lambda a: mismatch_excess(lch, P, Q, a, tol * 1e-2))
    rhs = h.budget(integrate_snr(h, 0.0, gamma, tol / 2))
    lv, rv = _sides(lhs.value, rhs.value, mutation)
    cfg = _mut_cfg({"channel": ch.name, "P": P, "Q": Q, "gamma": gamma,
                    "tol": tol}, mutation)
    return IdentityReport.build(
        "DMLE", lv, rv, lhs.error_estimate + rhs.error_estimate, tol, cfg,
        slack, notes="finiteness of the mismatched loss verified "
        "numerically at every SNR node")


def check_entropy(ch: LevyChannel, prior: DiscretePrior, tol: float = 1e-4,
                  *, slack: float = DEFAULT_SLACK,
                  mutation: Optional[Mutation] = None) -> IdentityReport:
    """SNR integral of the minimum mean loss against ``H(X)``."""
    lhs = entropy_via_loss_integral(_loss_ch(ch, mutation), prior, tol)
    lv, rv = _sides(lhs.value, prior.entropy(), mutation)
    cfg = _mut_cfg({"channel": ch.name, "prior": prior, "tol": tol},
                   mutation)
    return IdentityReport.build("ENTROPY", lv, rv, lhs.error_estimate, tol,
                                cfg, slack)


def check_relent(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                 tol: float = 1e-4, *, slack: float = DEFAULT_SLACK,
                 mutation: Optional[Mutation] = None) -> IdentityReport:
    """SNR integral of the excess loss against ``D(P || Q)``."""
    lhs = relative_entropy_via_loss_integral(_loss_ch(ch, mutation), P, Q,
                                             tol)
    lv, rv = _sides(lhs.value, P.kl(Q), mutation)
    cfg = _mut_cfg({"channel": ch.name, "P": P, "Q": Q, "tol": tol},
                   mutation)
    return IdentityReport.build("RELENT", lv, rv, lhs.error_estimate, tol,
                                cfg, slack)


def check_bregman(ch: LevyChannel, x1: float, x2: float, gamma: float = 1.0,
                  tol: float = 1e-10, *, slack: float = DEFAULT_SLACK,
                  mutation: Optional[Mutation] = None
                  ) -> list[IdentityReport]:
    """Loss at the point-mass reconstruction against the closed-form Bregman
    divergence, and the SNR slope of the relative entropy between the two
    point-mass output laws against the same divergence."""
    closed = float(ch.bregman(x1, x2))
    lch = _loss_ch(ch, mutation)
    loss = levy_loss(lch, x1, point_mass_reconstruction(lch, x2), tol,
                     full_output=True)
    lv, rv = _sides(loss.value, closed, mutation)
    cfg = _mut_cfg({"channel": ch.name, "x1": x1, "x2": x2}, mutation)
    collapse = IdentityReport.build("BREGMAN_COLLAPSE", lv, rv,
                                    loss.error_estimate, tol, cfg, slack)
    dtol = max(tol, 1e-8)
    slope = relent_derivative(ch, DiscretePrior.point_mass(x1),
                              DiscretePrior.point_mass(x2), gamma, dtol)
    lv, rv = _sides(slope.value, closed, mutation)
    cfg = dict(cfg, gamma=gamma)
    deriv = IdentityReport.build("BREGMAN_SNR_DERIV", lv, rv,
                                 slope.error_estimate, dtol, cfg, slack)
    return [collapse, deriv]


def check_gamma_amp_invariance(k: float, prior: DiscretePrior,
                               P: DiscretePrior, Q: DiscretePrior,
                               a_grid: Sequence[float] = (0.5, 1, 2, 4),
                               tol: float = 1e-6) -> IdentityReport:
    """Mutual information and relative entropy under ``Y ~ Gamma(k, a X / k)``
    must not depend on the amplification ``a``.

    ``lhs`` is the larger of the two spreads (max minus min over the grid)
    and ``rhs`` is 0; the check passes when the spread is below ``tol``.
    """
    qtol = tol * 1e-4
    mi = [law_mutual_information(make_gamma_amplified(k, a), prior, qtol)
          for a in a_grid]
    rel = [law_relative_entropy(make_gamma_amplified(k, a), P, Q, qtol)
           for a in a_grid]
    spread_i = float(np.ptp([r.value for r in mi]))
    spread_d = float(np.ptp([r.value for r in rel]))
    cfg = {"k": k, "prior": prior, "P": P, "Q": Q, "a_grid": list(a_grid),
           "tol": tol}
    notes = (f"I = {mi[0].value:.12g} (spread {spread_i:.3g}); "
             f"D = {rel[0].value:.12g} (spread {spread_d:.3g})")
    return IdentityReport.build("GAMMA_AMP_INVARIANCE",
                                max(spread_i, spread_d), 0.0, 0.0, tol, cfg,
                                slack=1.0, notes=notes,
                                passed=max(spread_i, spread_d) < tol)


def _default_y_grid(ch: LevyChannel, x: float, gamma: float):
    mean = gamma * x
    if ch.output_kind == "integer":
        return np.arange(0.0, max(20.0, 4 * mean + 20))
    if ch.name == "gaussian":
        sd = math.sqrt(gamma)
        return mean + sd * np.linspace(-6, 6, 49)
    return mean * np.geomspace(1e-3, 8, 49)


def check_esscher(ch: LevyChannel, x: float, gamma: float, y_grid=None,
                  tol: float = 1e-10) -> IdentityReport:
    """Conditional law against the exponentially tilted no-input law.

    ``lhs`` is the largest relative deviation over the grid; points where
    both densities underflow are skipped.
    """
    y = _default_y_grid(ch, x, gamma) if y_grid is None else np.asarray(
        y_grid, dtype=float)
    direct = ch.cond_law(x, gamma, y)
    tilted = ch.tilted_law(x, gamma, y)
    scale = np.maximum(np.abs(direct), np.abs(tilted))
    mask = scale > 1e-300
    rel = np.abs(direct - tilted)[mask] / scale[mask]
    worst = float(rel.max()) if rel.size else 0.0
    cfg = {"channel": ch.name, "x": x, "gamma": gamma, "points": int(y.size),
           "tol": tol}
    return IdentityReport.build("ESSCHER", worst, 0.0, 0.0, tol, cfg,
                                slack=1.0)


def check_fenchel(ch: LevyChannel, x_grid=None,
                  tol: float = 1e-12) -> IdentityReport:
    """``kappa(phi'(x)) + phi(x) = x phi'(x)`` on a grid of inputs.

    ``lhs`` is the largest deviation relative to ``1 + |x phi'(x)|``.
    """
    if x_grid is None:
        lo = ch.input_domain.lo
        x_grid = (np.linspace(-5, 5, 41) if not np.isfinite(lo)
                  else lo + np.geomspace(1e-3, 20, 41))
    x = np.asarray(x_grid, dtype=float)
    theta = ch.link(x)
    lhs = ch.kappa(theta) + ch.dual(x)
    rhs = x * theta
    worst = float(np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))))
    cfg = {"channel": ch.name, "points": int(x.size), "tol": tol}
    return IdentityReport.build("FENCHEL", worst, 0.0, 0.0, tol, cfg,
                                slack=1.0)


def check_cond_mean(ch: LevyChannel, x: float, gamma: float,
                    tol: float = 1e-10, *, slack: float = DEFAULT_SLACK
                    ) -> list[IdentityReport]:
    """Output mean ``gamma x`` and variance ``gamma kappa''(theta)``."""
    delta = DiscretePrior.point_mass(x)
    mean = gamma * x
    m = expectation_over_output(ch, gamma, delta, lambda y: y, tol)
    v = expectation_over_output(ch, gamma, delta,
                                lambda y: (y - mean) ** 2, tol)
    var = gamma * float(ch.d2kappa(ch.link(x)))
    cfg = {"channel": ch.name, "x": x, "gamma": gamma, "tol": tol}
    return [
        IdentityReport.build("COND_MEAN", m.value, mean, m.error_estimate,
                             tol, dict(cfg, moment="mean"), slack),
        IdentityReport.build("COND_MEAN", v.value, var, v.error_estimate,
                             tol, dict(cfg, moment="variance"), slack),
    ]


def check_pythagorean(ch: LevyChannel, P: DiscretePrior, Q: DiscretePrior,
                      gamma: float, z: float = 1.0, tol: float = 1e-9, *,
                      slack: float = DEFAULT_SLACK) -> list[IdentityReport]:
    """Excess squared error and excess Poisson loss of the mismatched
    conditional mean equal the loss between the two conditional means."""
    terms = pythagorean_terms(ch, P, Q, gamma, z, tol)
    cfg = {"channel": ch.name, "P": P, "Q": Q, "gamma": gamma, "z": z,
           "tol": tol}
    return [IdentityReport.build("PYTHAGOREAN", lhs, rhs, budget, tol,
                                 dict(cfg, loss=kind), slack)
            for kind, (lhs, rhs, budget) in terms.items()]


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _prior(item) -> DiscretePrior:
    if isinstance(item, DiscretePrior):
        return item
    if isinstance(item, dict):
        return DiscretePrior(np.asarray(item["atoms"], float),
                             np.asarray(item["weights"], float))
    return DiscretePrior.from_pairs(item)


_CHECK_KEYS = {
    "IMMLE": {"channel", "prior", "gamma"},
    "DMLE": {"channel", "P", "Q", "gamma"},
    "ENTROPY": {"channel", "prior"},
    "RELENT": {"channel", "P", "Q"},
    "BREGMAN": {"channel", "x1", "x2", "gamma"},
    "GAMMA_AMP_INVARIANCE": {"k", "prior", "P", "Q", "a_grid"},
    "ESSCHER": {"channel", "x", "gamma", "y_grid"},
    "FENCHEL": {"channel", "x_grid"},
    "COND_MEAN": {"channel", "x", "gamma"},
    "PYTHAGOREAN": {"channel", "P", "Q", "gamma", "z"},
}
_COMMON_KEYS = {"identity", "tol", "slack"}


def validate_check(item: dict):
    """Raise ``ValueError`` on an unknown identity or unexpected keys."""
    if not isinstance(item, dict) or "identity" not in item:
        raise ValueError(f"check {item!r} needs an 'identity' key")
    ident = item["identity"]
    if ident not in _CHECK_KEYS:
        raise ValueError(f"unknown identity {ident!r}; choose from "
                         f"{sorted(_CHECK_KEYS)}")
    extra = set(item) - _CHECK_KEYS[ident] - _COMMON_KEYS
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)} for {ident}")
    if "channel" in item:
        ch = get_channel(item["channel"])
        for key in ("prior", "P", "Q"):
            if key in item:
                _prior(item[key]).check_domain(ch)


def run_check(item: dict, mutation: Optional[Mutation] = None
              ) -> list[IdentityReport]:
    """Run one check described by a plain dict (see :func:`default_battery`)."""
    validate_check(item)
    ident = item["identity"]
    kw = {k: item[k] for k in ("tol", "slack") if k in item}
    ch = get_channel(item["channel"]) if "channel" in item else None
    mut = {"mutation": mutation}
    if ident == "IMMLE":
        return [check_immle(ch, _prior(item["prior"]), item["gamma"], **kw,
                            **mut)]
    if ident == "DMLE":
        return [check_dmle(ch, _prior(item["P"]), _prior(item["Q"]),
                           item["gamma"], **kw, **mut)]
    if ident == "ENTROPY":
        return [check_entropy(ch, _prior(item["prior"]), **kw, **mut)]
    if ident == "RELENT":
        return [check_relent(ch, _prior(item["P"]), _prior(item["Q"]), **kw,
                             **mut)]
    if ident == "BREGMAN":
        return check_bregman(ch, item["x1"], item["x2"],
                             item.get("gamma", 1.0), **kw, **mut)
    kw.pop("slack", None)
    if ident == "GAMMA_AMP_INVARIANCE":
        return [check_gamma_amp_invariance(
            item["k"], _prior(item["prior"]), _prior(item["P"]),
            _prior(item["Q"]), item.get("a_grid", (0.5, 1, 2, 4)), **kw)]
    if ident == "ESSCHER":
        return [check_esscher(ch, item["x"], item["gamma"],
                              item.get("y_grid"), **kw)]
    if ident == "FENCHEL":
        return [check_fenchel(ch, item.get("x_grid"), **kw)]
    if ident == "COND_MEAN":
        return check_cond_mean(ch, item["x"], item["gamma"], **kw)
    return check_pythagorean(ch, _prior(item["P"]), _prior(item["Q"]),
                             item["gamma"], item.get("z", 1.0), **kw)


def _binary(name, q=None):
    atoms = [-1.0, 1.0] if name == "gaussian" else [1.0, 2.0]
    w = [0.5, 0.5] if q is None else [q, 1 - q]
    return {"atoms": atoms, "weights": w}


def default_battery() -> list[dict]:
    """The standard set of checks over the four closed-form channels."""
    names = ["gaussian", "poisson", "gamma", "negative-binomial"]
    out = []
    for n in names:
        for g in (0.5, 1.0, 2.0):
            out.append({"identity": "IMMLE", "channel": n,
                        "prior": _binary(n), "gamma": g})
        for g in (0.5, 2.0):
            out.append({"identity": "DMLE", "channel": n, "P": _binary(n),
                        "Q": _binary(n, 0.8), "gamma": g})
    for n in ("gaussian", "poisson"):
        out.append({"identity": "ENTROPY", "channel": n,
                    "prior": _binary(n)})
    out.append({"identity": "ENTROPY", "channel": "poisson",
                "prior": {"atoms": [0.0, 3.0], "weights": [0.5, 0.5]}})
    for n in ("poisson", "gamma"):
        out.append({"identity": "RELENT", "channel": n, "P": _binary(n),
                    "Q": _binary(n, 0.9)})
    for n, x1, x2 in (("gaussian", 3.0, 1.0), ("poisson", 2.0, 1.0),
                      ("gamma", 2.0, 1.0), ("negative-binomial", 1.0, 2.0)):
        out.append({"identity": "BREGMAN", "channel": n, "x1": x1, "x2": x2,
                    "gamma": 1.0})
    for k in (1.0, 2.0):
        out.append({"identity": "GAMMA_AMP_INVARIANCE", "k": k,
                    "prior": _binary("gamma"), "P": _binary("gamma"),
                    "Q": _binary("gamma", 0.9),
                    "a_grid": [0.5, 1.0, 2.0, 4.0]})
    for n, x, g in (("gaussian", 1.0, 2.0), ("poisson", 0.0, 1.0),
                    ("poisson", 2.0, 1.5), ("gamma", 2.0, 0.5),
                    ("negative-binomial", 1.5, 2.0)):
        out.append({"identity": "ESSCHER", "channel": n, "x": x, "gamma": g})
    for n in names:
        out.append({"identity": "FENCHEL", "channel": n})
        x = 0.5 if n == "gaussian" else 1.5
        out.append({"identity": "COND_MEAN", "channel": n, "x": x,
                    "gamma": 0.7})
        out.append({"identity": "PYTHAGOREAN", "channel": n,
                    "P": _binary(n), "Q": _binary(n, 0.8), "gamma": 1.0,
                    "z": 0.7})
    return out


def _run_one(args):
    item, mutation = args
    return run_check(item, mutation)


def run_suite(config: Iterable[dict] | dict | None = None, jobs: int = 1,
              mutation: Optional[Mutation] = None) -> list[IdentityReport]:
    """Run a battery of checks; the result is sorted by identity and config
    hash so it does not depend on execution order.

    ``config`` is a list of check dicts, a dict with a ``"checks"`` list, or
    ``None`` for :func:`default_battery`.
    """
    if config is None:
        checks = default_battery()
    elif isinstance(config, dict):
        checks = list(config.get("checks", []))
    else:
        checks = list(config)
    for item in checks:
        validate_check(item)
    tasks = [(item, mutation) for item in checks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_one, tasks))
    else:
        batches = [_run_one(t) for t in tasks]
    reports = [r for batch in batches for r in batch]
    return sorted(reports, key=lambda r: (r.identity_id, r.config_hash))
