"""Anchored forward-backward splitting with variable step size.

For a maximally monotone operator A (given through its resolvent
J_{gamma A} = (Id + gamma A)^{-1}) and a beta-cocoercive operator B, the
forward-backward map

    T_gamma = J_{gamma A} (Id - gamma B),        gamma in (0, 2 beta),

is 2beta/(4beta - gamma)-averaged, hence nonexpansive, and its fixed points
are exactly the zeros of A + B.  Running the anchored iteration over the
family T_n = T_{gamma_n} gives the variable-step-size splitting scheme; the
family satisfies the cross-index comparison with respect to (gamma_n), so
the gap-series modulus and the whole rate bundle follow from the schedule's
gamma data alone.

Only finite-dimensional Euclidean problems are treated, and only operators
with closed-form resolvents ship; cocoercivity constants are supplied
analytically (the gradient of an L-smooth convex function is 1/L-cocoercive)
and spot-verified by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .iterate import IterationTrace, ProblemInstance, run_tikhonov_mann
from .mappings import MappingFamily, chi_T_from_gamma, soft_threshold
from .rates import RateBundle, chi_combined, psi0_from_chi, sigma_ar, translate_ar_to_tn_ar
from .sequences import ParamSchedule


@dataclass(frozen=True)
class MonotoneOp:
    """A maximally monotone operator given through its resolvent oracle.

    ``prox(gamma, x)`` must return J_{gamma A}(x) = (Id + gamma A)^{-1}(x).
    Resolvents are firmly nonexpansive; ``check_firmly_nonexpansive`` spot
    checks that on samples.
    """

    name: str
    prox: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CocoerciveOp:
    """A single-valued operator with a declared cocoercivity constant:
    <x - y, Bx - By> >= beta_coco ||Bx - By||^2."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    beta_coco: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)


def l1_operator(weight: float = 1.0) -> MonotoneOp:
    """Subdifferential of weight * l1 norm; resolvent is soft thresholding."""
    if weight < 0:
        raise ValueError(f"weight must be >= 0, got {weight}")
    return MonotoneOp(
        name=f"l1({weight:g})", prox=lambda gamma, x: soft_threshold(x, gamma * weight)
    )


def box_operator(lo, hi) -> MonotoneOp:
    """Normal cone of the box [lo, hi]; resolvent is the projection, for
    every step size."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box is empty: some lo component exceeds hi")
    return MonotoneOp(name="box", prox=lambda gamma, x: np.clip(x, lo, hi))


def zero_operator() -> MonotoneOp:
    """The zero operator; its resolvent is the identity."""
    return MonotoneOp(name="zero", prox=lambda gamma, x: np.asarray(x, dtype=float))


def quadratic_gradient(diag, b) -> CocoerciveOp:
    """Gradient of x -> 0.5 ||D x - b||^2 for diagonal D: B x = D^2 x - D b.

    The gradient is L-smooth with L = max(diag^2), hence 1/L-cocoercive;
    an all-zero diagonal gives the zero operator (cocoercive for every
    constant, recorded as infinity).
    """
    d = np.asarray(diag, dtype=float)
    b = np.asarray(b, dtype=float)
    if d.shape != b.shape:
        raise ValueError(f"diag and b must share a shape, got {d.shape} and {b.shape}")
    lipschitz = float(np.max(d * d))
    beta = math.inf if lipschitz == 0.0 else 1.0 / lipschitz
    d2 = d * d
    db = d * b
    return CocoerciveOp(name="quadratic_gradient", fn=lambda x: d2 * x - db, beta_coco=beta)


def zero_cocoercive(dim: int) -> CocoerciveOp:
    """The zero operator, cocoercive for every constant."""
    zero = np.zeros(dim)
    return CocoerciveOp(name="zero", fn=lambda x: zero, beta_coco=math.inf)


def forward_backward_map(
    A: MonotoneOp, B: CocoerciveOp, gamma: float, x: np.ndarray
) -> np.ndarray:
    """One forward-backward application: J_{gamma A}(x - gamma B x)."""
    if not 0.0 < gamma < 2.0 * B.beta_coco:
        raise ValueError(
            f"step size must lie in (0, 2 beta) = (0, {2.0 * B.beta_coco!r}), got {gamma}"
        )
    x = np.asarray(x, dtype=float)
    return A.prox(gamma, x - gamma * B(x))


def forward_backward_family(
    A: MonotoneOp, B: CocoerciveOp, gamma: Callable[[int], float], zero_point: np.ndarray
) -> MappingFamily:
    """The family T_n = J_{gamma_n A}(Id - gamma_n B) with a registered zero
    of A + B as its common fixed point."""
    return MappingFamily(
        name=f"fb[{A.name}+{B.name}]",
        kind="jp2_with_gamma",
        fn=lambda n, x: forward_backward_map(A, B, gamma(n), x),
        fixed_point=np.asarray(zero_point, dtype=float),
        gamma=gamma,
    )


def make_tfb_instance(
    A: MonotoneOp,
    B: CocoerciveOp,
    schedule: ParamSchedule,
    u,
    x0,
    z,
    space=None,
) -> ProblemInstance:
    """Assemble the anchored splitting problem on R^d.

    ``z`` is a registered zero of A + B; the radius bound M is derived from
    it.  Enforced parameter ranges: gamma_n in (0, 2 beta) is checked at
    every application, and lambda_n must lie in (0, 1], the always-safe
    relaxation range for a nonexpansive map.
    """
    from .geometry import EuclideanSpace

    schedule.require_gamma()
    u = np.asarray(u, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    z = np.asarray(z, dtype=float)
    if space is None:
        space = EuclideanSpace(dim=len(x0))
    lam0 = schedule.lam(0)
    if not 0.0 < lam0 <= 1.0:
        raise ValueError(f"lambda_n must lie in (0, 1], got lambda_0 = {lam0}")
    family = forward_backward_family(A, B, schedule.gamma, z)
    return ProblemInstance.create(
        space=space, family=family, schedule=schedule, u=u, x0=x0, p=z
    )


def run_tfb(
    A: MonotoneOp,
    B: CocoerciveOp,
    schedule: ParamSchedule,
    u,
    x0,
    z,
    horizon: int,
    record_points: bool | None = None,
) -> IterationTrace:
    """Run the anchored forward-backward scheme and record its trace."""
    instance = make_tfb_instance(A, B, schedule, u, x0, z)
    lams = (schedule.lam(n) for n in range(horizon))
    if any(not 0.0 < lam <= 1.0 for lam in lams):
        raise ValueError("lambda_n must lie in (0, 1] for every step")
    return run_tikhonov_mann(instance, horizon, record_points=record_points)


def tfb_rates(schedule: ParamSchedule, M: int) -> RateBundle:
    """Rate bundle for the splitting scheme, derived from the schedule alone.

    The gap-series modulus comes from the gamma data; the rest is the
    general composition.  Raises a configuration error naming whichever
    schedule ingredient is missing.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    schedule.require_gamma()
    chi_T = chi_T_from_gamma(M, schedule.Gamma_cap, schedule.N_Gamma, schedule.chi_gamma)
    chi = chi_combined(chi_T, schedule.chi_lambda, schedule.chi_beta, M)
    Sigma = sigma_ar(schedule.sigma_beta, chi, psi0_from_chi(chi), M)
    Sigma_T = translate_ar_to_tn_ar(
        Sigma, M, schedule.Lambda_cap, schedule.N_Lambda, schedule.sigma
    )
    return RateBundle(provenance="general_theorem", Sigma=Sigma, Sigma_T=Sigma_T, chi=chi)


def check_firmly_nonexpansive(
    A: MonotoneOp,
    dim: int,
    gammas,
    samples: int = 200,
    rng: np.random.Generator | None = None,
    seed: int = 0,
    box_radius: float = 5.0,
) -> float:
    """Worst violation of firm nonexpansiveness of the resolvent on samples:
    ||Jx - Jy||^2 <= <x - y, Jx - Jy>."""
    if rng is None:
        rng = np.random.default_rng(seed)
    worst = -math.inf
    gammas = list(gammas)
    for _ in range(samples):
        gamma = gammas[int(rng.integers(len(gammas)))]
        x = rng.uniform(-box_radius, box_radius, size=dim)
        y = rng.uniform(-box_radius, box_radius, size=dim)
        jx = A.prox(gamma, x)
        jy = A.prox(gamma, y)
        diff = jx - jy
        worst = max(worst, float(diff @ diff - (x - y) @ diff))
    return worst


def check_cocoercive(
    B: CocoerciveOp,
    dim: int,
    samples: int = 200,
    rng: np.random.Generator | None = None,
    seed: int = 0,
    box_radius: float = 5.0,
) -> float:
    """Worst violation of <x - y, Bx - By> >= beta ||Bx - By||^2 on samples."""
    if rng is None:
        rng = np.random.default_rng(seed)
    beta = B.beta_coco
    worst = -math.inf
    for _ in range(samples):
        x = rng.uniform(-box_radius, box_radius, size=dim)
        y = rng.uniform(-box_radius, box_radius, size=dim)
        bx_by = B(x) - B(y)
        quad = float(bx_by @ bx_by)
        inner = float((x - y) @ bx_by)
        if math.isinf(beta):
            worst = max(worst, quad)  # zero operator: both sides vanish
        else:
            worst = max(worst, beta * quad - inner)
    return worst
