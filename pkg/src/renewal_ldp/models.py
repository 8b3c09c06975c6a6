"""Holding-time distribution models described by their cumulant generating function.

Each model carries the CGF phi, its first three derivatives on the interior of
the effective domain, the domain boundary data, an exact sampler, and the
one-dimensional Legendre transform phi*.  All holding times are positive and
light-tailed: phi is finite on a right neighborhood of 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

INF = float("inf")


class LscCase(Enum):
    """Domain taxonomy for the bivariate limit function built on phi."""

    CLOSED_BOUNDARY = "closed_boundary"        # D(phi)=(-inf, abar]; Lambda lsc
    OPEN_INTEGRABLE = "open_integrable"        # open boundary, phi integrable; Lambda not lsc
    OPEN_NONINTEGRABLE = "open_nonintegrable"  # open boundary, phi not integrable; Lambda lsc
    FULL_LINE = "full_line"                    # D(phi)=R


@dataclass(frozen=True)
class DomainSpec:
    """Effective domain of phi: (-inf, boundary) or (-inf, boundary]."""

    boundary: float                  # abar in (0, inf]
    boundary_closed: bool            # abar itself in D(phi)
    integrable_at_boundary: bool     # int phi finite on a left neighborhood of abar

    def __post_init__(self):
        if not self.boundary > 0:
            raise ValueError("domain boundary must be positive")

    def contains(self, alpha: float) -> bool:
        if self.boundary == INF:
            return True
        if self.boundary_closed:
            return alpha <= self.boundary
        return alpha < self.boundary


@dataclass(frozen=True)
class HoldingTimeModel:
    """A positive light-tailed holding-time law, seen through its CGF."""

    kind: str
    params: dict
    domain: DomainSpec
    cgf: Callable[[float], float]
    cgf_d1: Callable[[float], float]
    cgf_d2: Callable[[float], float]
    cgf_d3: Callable[[float], float]
    antiderivative: Optional[Callable[[float], float]] = None
    sampler_spec: str = ""
    _sampler: Callable = field(default=None, repr=False)

    @property
    def mean(self) -> float:
        return self.cgf_d1(0.0)

    @property
    def variance(self) -> float:
        return self.cgf_d2(0.0)

    def phi(self, alpha: float) -> float:
        """Extended-real CGF value; +inf outside the effective domain."""
        if not self.domain.contains(alpha):
            return INF
        return self.cgf(alpha)

    def sample(self, rng: np.random.Generator, size=None):
        """Exact variates of the holding-time law."""
        return self._sampler(rng, size)

    def descriptor(self) -> dict:
        """JSON-serializable model descriptor."""
        return {"kind": self.kind, "params": dict(self.params)}


def _require_positive(params: dict) -> None:
    for name, value in params.items():
        if not value > 0:
            raise ValueError(f"parameter {name!r} must be strictly positive, got {value}")


def make_model(kind: str, params: dict) -> HoldingTimeModel:
    """Build one of the supported holding-time models.

    Supported kinds and their CGFs:

    * ``exponential`` (lam): log(lam/(lam-a)) on (-inf, lam)
    * ``inverse_gaussian`` (mu): mu - sqrt(mu^2 - 2a) on (-inf, mu^2/2]
    * ``noncentral_chi_squared`` (lam, k): lam*a/(1-2a) - (k/2)log(1-2a) on (-inf, 1/2)
    * ``gamma`` (shape, rate): -shape*log(1-a/rate) on (-inf, rate)
    """
    _require_positive(params)
    if kind == "exponential":
        lam = params["lam"]
        return HoldingTimeModel(
            kind=kind,
            params={"lam": lam},
            domain=DomainSpec(lam, boundary_closed=False, integrable_at_boundary=True),
            cgf=lambda a: math.log(lam / (lam - a)),
            cgf_d1=lambda a: 1.0 / (lam - a),
            cgf_d2=lambda a: 1.0 / (lam - a) ** 2,
            cgf_d3=lambda a: 2.0 / (lam - a) ** 3,
            antiderivative=lambda a: _exponential_antiderivative(lam, a),
            sampler_spec="inverse-cdf exponential",
            _sampler=lambda rng, size: rng.exponential(scale=1.0 / lam, size=size),
        )
    if kind == "inverse_gaussian":
        mu = params["mu"]
        return HoldingTimeModel(
            kind=kind,
            params={"mu": mu},
            domain=DomainSpec(mu**2 / 2.0, boundary_closed=True, integrable_at_boundary=True),
            cgf=lambda a: mu - math.sqrt(max(mu**2 - 2.0 * a, 0.0)),
            cgf_d1=lambda a: (mu**2 - 2.0 * a) ** -0.5,
            cgf_d2=lambda a: (mu**2 - 2.0 * a) ** -1.5,
            cgf_d3=lambda a: 3.0 * (mu**2 - 2.0 * a) ** -2.5,
            antiderivative=None,
            sampler_spec="Michael-Schucany-Haas transform (numpy wald)",
            _sampler=lambda rng, size: rng.wald(mean=1.0 / mu, scale=1.0, size=size),
        )
    if kind == "noncentral_chi_squared":
        lam, k = params["lam"], params["k"]
        return HoldingTimeModel(
            kind=kind,
            params={"lam": lam, "k": k},
            domain=DomainSpec(0.5, boundary_closed=False, integrable_at_boundary=False),
            cgf=lambda a: lam * a / (1.0 - 2.0 * a) - 0.5 * k * math.log(1.0 - 2.0 * a),
            cgf_d1=lambda a: lam / (1.0 - 2.0 * a) ** 2 + k / (1.0 - 2.0 * a),
            cgf_d2=lambda a: 4.0 * lam / (1.0 - 2.0 * a) ** 3 + 2.0 * k / (1.0 - 2.0 * a) ** 2,
            cgf_d3=lambda a: 24.0 * lam / (1.0 - 2.0 * a) ** 4 + 8.0 * k / (1.0 - 2.0 * a) ** 3,
            antiderivative=None,
            sampler_spec="Poisson-mixed chi-squared (numpy noncentral_chisquare)",
            _sampler=lambda rng, size: rng.noncentral_chisquare(df=k, nonc=lam, size=size),
        )
    if kind == "gamma":
        shape, rate = params["shape"], params["rate"]
        return HoldingTimeModel(
            kind=kind,
            params={"shape": shape, "rate": rate},
            domain=DomainSpec(rate, boundary_closed=False, integrable_at_boundary=True),
            cgf=lambda a: -shape * math.log(1.0 - a / rate),
            cgf_d1=lambda a: shape / (rate - a),
            cgf_d2=lambda a: shape / (rate - a) ** 2,
            cgf_d3=lambda a: 2.0 * shape / (rate - a) ** 3,
            antiderivative=None,
            sampler_spec="Marsaglia-Tsang rejection (numpy standard_gamma)",
            _sampler=lambda rng, size: rng.standard_gamma(shape, size=size) / rate,
        )
    raise ValueError(f"unknown model kind {kind!r}")


def _exponential_antiderivative(lam: float, a: float) -> float:
    """Antiderivative of log(lam/(lam-y)) evaluated at y=a, for a <= lam."""
    return a * math.log(lam) + _xlogx(lam - a) - _xlogx(lam) + a


def _xlogx(t: float) -> float:
    """t*log(t) with the continuous extension 0 at t=0."""
    if t <= 0.0:
        return 0.0
    return t * math.log(t)


def model_from_descriptor(desc: dict) -> HoldingTimeModel:
    """Inverse of :meth:`HoldingTimeModel.descriptor`."""
    return make_model(desc["kind"], dict(desc["params"]))


def parse_model_spec(text: str) -> HoldingTimeModel:
    """Parse the ``kind:param[,param]`` CLI mini-syntax.

    Parameters are positional in the order listed by :func:`make_model`,
    e.g. ``exponential:1``, ``gamma:2,2``, ``noncentral_chi_squared:1,1``.
    """
    kind, _, raw = text.partition(":")
    kind = kind.strip()
    values = [float(v) for v in raw.split(",")] if raw else []
    names = {
        "exponential": ["lam"],
        "inverse_gaussian": ["mu"],
        "noncentral_chi_squared": ["lam", "k"],
        "gamma": ["shape", "rate"],
    }.get(kind)
    if names is None:
        raise ValueError(f"unknown model kind {kind!r}")
    if len(values) != len(names):
        raise ValueError(f"model {kind!r} expects {len(names)} parameter(s), got {len(values)}")
    return make_model(kind, dict(zip(names, values)))


def classify_domain(model: HoldingTimeModel) -> LscCase:
    """Place the model in the three-bullet domain taxonomy (plus the full-line case)."""
    dom = model.domain
    if dom.boundary == INF:
        return LscCase.FULL_LINE
    if dom.boundary_closed:
        return LscCase.CLOSED_BOUNDARY
    if dom.integrable_at_boundary:
        return LscCase.OPEN_INTEGRABLE
    return LscCase.OPEN_NONINTEGRABLE


@dataclass
class RateEvaluation:
    """Value of a rate function together with the optimizing tilt and diagnostics."""

    value: float
    argmax_tilt: Optional[tuple] = None
    converged: bool = True
    iterations: int = 0
    method: str = "closed_form"
    on_boundary: bool = False


def phi_star(model: HoldingTimeModel, z1: float) -> RateEvaluation:
    """One-dimensional Legendre transform sup_a {a*z1 - phi(a)}.

    Infinite for z1 <= 0 (holding times are positive); zero exactly at the
    mean z1 = phi'(0).  Solved by the monotone root phi'(a) = z1, with the
    exponential closed form short-circuited.
    """
    if z1 <= 0.0:
        return RateEvaluation(INF, method="closed_form")
    if model.kind == "exponential":
        lam = model.params["lam"]
        value = lam * z1 - 1.0 - math.log(lam * z1)
        return RateEvaluation(max(value, 0.0), argmax_tilt=(lam - 1.0 / z1,), method="closed_form")
    root, iters, ok = _solve_phi_prime(model, z1)
    if not ok:
        return RateEvaluation(
            max(root * z1 - model.phi(root), 0.0),
            argmax_tilt=(root,),
            converged=False,
            iterations=iters,
            method="newton",
        )
    value = root * z1 - model.cgf(root)
    return RateEvaluation(max(value, 0.0), argmax_tilt=(root,), iterations=iters, method="newton")


def _solve_phi_prime(model: HoldingTimeModel, z1: float, maxiter: int = 200):
    """Unique root of phi'(a) = z1 on the interior of D(phi).

    phi' is strictly increasing, so a bracketed solve is safe: the lower end
    expands to -inf, the upper end approaches the boundary geometrically.
    """
    abar = model.domain.boundary
    lo = -1.0
    iters = 0
    while model.cgf_d1(lo) > z1 and iters < maxiter:
        lo *= 2.0
        iters += 1
    if abar == INF:
        hi = 1.0
        while model.cgf_d1(hi) < z1 and iters < maxiter:
            hi *= 2.0
            iters += 1
    else:
        gap = abar if abar < INF else 1.0
        hi = abar - gap * 0.5
        while model.cgf_d1(hi) < z1 and iters < maxiter:
            hi = abar - (abar - hi) * 0.5
            iters += 1
    if iters >= maxiter:
        return hi, iters, False
    root = brentq(lambda a: model.cgf_d1(a) - z1, lo, hi, xtol=1e-14, rtol=1e-15)
    return root, iters, True


BUILTIN_MODELS = {
    "exponential": {"lam": 1.0},
    "inverse_gaussian": {"mu": 1.0},
    "noncentral_chi_squared": {"lam": 1.0, "k": 1.0},
    "gamma": {"shape": 2.0, "rate": 2.0},
}


def builtin_models() -> list[HoldingTimeModel]:
    """One representative instance of each supported kind (used across the tests)."""
    return [make_model(kind, dict(params)) for kind, params in BUILTIN_MODELS.items()]
