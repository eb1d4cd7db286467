"""Closed-form convergence bounds, exact expectation oracles and certification.

Bounds are evaluated exactly as the formulas read.  Where the dual norm
``||.||_{(1+alpha-nu)(1-nu), nu/(nu-1)}`` enters (through the sublevel-set
radius R), callers choose an :class:`ExponentConvention`:

* ``AS_PRINTED``: weight exponent ``(1+alpha-nu)(1-nu)``;
* ``CORRECTED``: weight exponent ``-(1+alpha-nu)/(nu-1)``, the actual dual
  of ``||.||_{1+alpha-nu, nu}``.

Both coincide when ``nu = 2``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize

from .norms import norm_from_block_norms
from .objectives import ConvexityClass, HolderProfile, ObjectiveModel
from .rbcd import RunTrace, _step_batch, sampling_distribution


class Theorem(str, enum.Enum):
    NONCONVEX_T1 = "nonconvex_T1"
    CONVEX_T2 = "convex_T2"
    STRONGLY_CONVEX_LINEAR_T3A = "strongly_convex_linear_T3a"
    STRONGLY_CONVEX_SUBLINEAR_T3B = "strongly_convex_sublinear_T3b"
    INTERPOLATION_C1 = "interpolation_C1"


class ExponentConvention(str, enum.Enum):
    AS_PRINTED = "as_printed"
    CORRECTED = "corrected"


class BudgetExceeded(ValueError):
    pass


def radius_exponents(nu: float, alpha: float, convention: ExponentConvention | str) -> tuple[float, float]:
    """``(beta, q)`` of the norm in which the sublevel radius R is measured."""
    convention = ExponentConvention(convention)
    a = 1.0 + alpha - nu
    q = nu / (nu - 1.0)
    if convention is ExponentConvention.AS_PRINTED:
        return a * (1.0 - nu), q
    return -a / (nu - 1.0), q


def decrease_norm_exponent(nu: float, alpha: float) -> float:
    """Weight exponent ``1+alpha-nu`` of the gradient norm in the per-step decrease bound."""
    return 1.0 + alpha - nu


# ---------------------------------------------------------------------------
# one-step oracles


def exact_conditional_decrease(model: ObjectiveModel, alpha: float, x) -> float:
    """``f(x) - E[f(x+) | x]``, summed exactly over the m possible blocks."""
    x = model._check(x)
    f = model.value(x)
    if not np.isfinite(f):
        raise ValueError("objective is not finite at x")
    p = sampling_distribution(model.profile, alpha)
    g = model.gradient(x)
    children = np.stack([_step_batch(model, x, g, i) for i in range(model.profile.m)])
    fc = model.value(children)
    if not np.all(np.isfinite(fc)):
        raise ValueError("objective is not finite after a block step")
    return float(np.sum(p * (f - fc)))


def expected_decrease_lower_bound(model: ObjectiveModel, alpha: float, x) -> float:
    """``||grad f(x)||_{alpha+1-nu, nu}^nu / (nu S_alpha)``."""
    prof = model.profile
    nu = prof.nu
    bn = model.partition.block_norms(model.gradient(x))
    n = norm_from_block_norms(bn, prof.block_constants, decrease_norm_exponent(nu, alpha), nu)
    return float(n**nu / (nu * prof.s_alpha(alpha)))


# ---------------------------------------------------------------------------
# expectation oracles


@dataclass
class ExpectationResult:
    """Per-iteration expectations ``E[.]`` for ``k = 0..depth``.

    ``grad_norm`` holds ``E ||grad f(x^k)||_{1+alpha-nu, nu}``; extra norms
    requested by ``(beta, q)`` live in ``norms``.  Monte Carlo results also
    carry standard errors; exact ones have them at zero.
    """

    mean_f: np.ndarray
    grad_norm: np.ndarray
    norms: dict = field(default_factory=dict)
    se_f: np.ndarray | None = None
    se_grad_norm: np.ndarray | None = None
    samples: int = 0
    exact: bool = True

    @property
    def depth(self) -> int:
        return len(self.mean_f) - 1


def expectation_tree(
    model: ObjectiveModel,
    alpha: float,
    x0,
    depth: int,
    norms: Iterable[tuple[float, float]] = (),
    budget: int = 10**6,
) -> ExpectationResult:
    """Exact expectations by enumerating all ``m^depth`` block sequences.

    Level ``k`` holds every reachable ``x^k`` (one per sequence) with its
    probability; sums over a level run through numpy's pairwise summation
    in a fixed order, so results are reproducible bit for bit.
    """
    m = model.profile.m
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if m**depth > budget:
        raise BudgetExceeded(f"m^k = {m}^{depth} exceeds the enumeration budget {budget}")
    prof = model.profile
    norms = list(norms)
    p = sampling_distribution(prof, alpha)
    exp_dec = decrease_norm_exponent(prof.nu, alpha)
    X = model._check(x0).astype(float)[None, :]
    P = np.ones(1)
    mean_f, gnorm = [], []
    extra = {nq: [] for nq in norms}
    for k in range(depth + 1):
        F = model.value(X)
        G = model.gradient(X)
        if not np.all(np.isfinite(F)) or not np.all(np.isfinite(G)):
            raise ValueError(f"non-finite value in the expectation tree at depth {k}")
        bn = model.partition.block_norms(G)
        mean_f.append(float(np.sum(P * F)))
        gnorm.append(float(np.sum(P * norm_from_block_norms(bn, prof.block_constants, exp_dec, prof.nu))))
        for beta, q in norms:
            extra[(beta, q)].append(float(np.sum(P * norm_from_block_norms(bn, prof.block_constants, beta, q))))
        if k == depth:
            break
        children = np.stack([_step_batch(model, X, G, i) for i in range(m)], axis=1)
        X = children.reshape(-1, model.dim)
        P = (P[:, None] * p[None, :]).reshape(-1)
    return ExpectationResult(
        np.array(mean_f), np.array(gnorm), {k: np.array(v) for k, v in extra.items()},
        np.zeros(depth + 1), np.zeros(depth + 1), 0, True,
    )


def monte_carlo_expectation(traces: Sequence[RunTrace]) -> ExpectationResult:
    """Sample means and standard errors over independent run traces."""
    if not traces:
        raise ValueError("need at least one trace")
    n = min(len(t.records) for t in traces)
    F = np.array([t.f_values[:n] for t in traces])
    G = np.array([t.grad_norms[:n] for t in traces])
    N = len(traces)
    ddof = 1 if N > 1 else 0
    return ExpectationResult(
        F.mean(axis=0), G.mean(axis=0), {},
        F.std(axis=0, ddof=ddof) / math.sqrt(N), G.std(axis=0, ddof=ddof) / math.sqrt(N),
        N, False,
    )


# ---------------------------------------------------------------------------
# sublevel-set radius


def _inverse_growth(F: float, a: float, p: float, b: float) -> float:
    """Largest ``t >= 0`` with ``a t^p + b t^2 <= F``."""
    if F <= 0:
        return 0.0
    if a == 0 and b == 0:
        raise ValueError("objective is not coercive along some block")
    if b == 0:
        return (F / a) ** (1.0 / p)
    if a == 0:
        return math.sqrt(F / b)
    hi = min((F / a) ** (1.0 / p), math.sqrt(F / b))
    return optimize.brentq(lambda t: a * t**p + b * t * t - F, 0.0, hi, xtol=1e-300, rtol=1e-15)


def _inner_max(w: float, q: float, a: float, p: float, b: float, lam: float, T: float) -> tuple[float, float]:
    """``max_{0<=t<=T} w t^q - lam (a t^p + b t^2)`` and its argmax."""

    def g(t):
        return w * t**q - lam * (a * t**p + b * t * t)

    def dg(t):
        return w * q * t ** (q - 1.0) - lam * (a * p * t ** (p - 1.0) + 2.0 * b * t)

    best_t, best = 0.0, 0.0
    if g(T) > best:
        best_t, best = T, g(T)
    # a sum of three powers has at most two positive critical points
    grid = np.unique(np.concatenate([np.geomspace(T * 1e-12, T, 400), np.linspace(0.0, T, 200)[1:]]))
    d = dg(grid)
    for lo, hi, dlo, dhi in zip(grid[:-1], grid[1:], d[:-1], d[1:]):
        if dlo > 0 >= dhi:
            t = optimize.brentq(dg, lo, hi, xtol=1e-300, rtol=1e-15)
            if g(t) > best:
                best_t, best = t, g(t)
    return best, best_t


def _radius_allocation(F: float, w, a, p: float, b, q: float) -> tuple[float, float]:
    """Bounds on ``max sum_i w_i t_i^q`` subject to ``sum_i a_i t_i^p + b_i t_i^2 <= F``.

    Returns ``(upper, lower)``.  ``upper`` is the Lagrangian dual value,
    ``lower`` the best feasible allocation found; they coincide (to rounding)
    whenever the problem is concave in the budget split or its optimum is a
    vertex, which covers every built-in family at ``q = p``.
    """
    m = len(w)
    T = np.array([_inverse_growth(F, a[i], p, b[i]) for i in range(m)])
    vertex = float(np.max(w * T**q))
    if m == 1:
        return vertex, vertex
    if q == p and not np.any(b):
        # exact: the objective is linear in each block's share of the budget
        val = F * float(np.max(w / a))
        return val, val
    if q == p and p < 2 and np.all(b > 0):
        return _radius_allocation_kkt(F, w, a, p, b, T)

    def dual(lam):
        return lam * F + sum(_inner_max(w[i], q, a[i], p, b[i], lam, T[i])[0] for i in range(m))

    lam0 = max(vertex / F, 1e-300)
    res = optimize.minimize_scalar(
        lambda u: dual(math.exp(u)), bounds=(math.log(lam0) - 40.0, math.log(lam0) + 40.0),
        method="bounded", options={"xatol": 1e-13, "maxiter": 500},
    )
    lam = math.exp(res.x)
    upper = min(dual(lam), float(np.sum(w * T**q)))
    ts = np.array([_inner_max(w[i], q, a[i], p, b[i], lam, T[i])[1] for i in range(m)])
    used = a * ts**p + b * ts**2
    if used.sum() > F:
        used = used * (F / used.sum())
    ts = np.array([_inverse_growth(used[i], a[i], p, b[i]) for i in range(m)])
    lower = max(vertex, float(np.sum(w * ts**q)))
    return max(upper, lower), lower


def _radius_allocation_kkt(F, w, a, p, b, T) -> tuple[float, float]:
    """Concave case ``q = p < 2``, ``b > 0``: water-filling on the multiplier.

    For a multiplier ``lam`` block ``i`` sits at
    ``t_i = ((w_i - lam a_i) p / (2 lam b_i))^(1/(2-p))`` (zero once
    ``lam >= w_i/a_i``), and the spent budget decreases in ``lam``.
    """

    def ts(lam):
        num = np.maximum(w - lam * a, 0.0) * p / (2.0 * lam * b)
        return np.minimum(np.power(num, 1.0 / (2.0 - p)), T)

    def spent(lam):
        t = ts(lam)
        return float(np.sum(a * t**p + b * t * t)) - F

    hi = float(np.max(np.where(a > 0, w / np.where(a > 0, a, 1.0), np.inf)))
    if not np.isfinite(hi):
        hi = 1.0
        while spent(hi) > 0:
            hi *= 2.0
    lo = hi
    while spent(lo) < 0:
        lo /= 2.0
    lam = optimize.brentq(spent, lo, hi, xtol=1e-300, rtol=1e-15) if lo < hi else hi
    t = ts(lam)
    val = float(np.sum(w * t**p))
    return val, val


def level_set_radius_bounds(model: ObjectiveModel, x0, beta: float, q: float) -> tuple[float, float]:
    """``(upper, lower)`` bounds on ``R_{beta,q}(x0)``; see :func:`level_set_radius`."""
    F = model.value(x0) - model.optimum_value
    if F <= 0:
        return 0.0, 0.0
    a, p, b, exact = model.growth_terms()
    L = np.asarray(model.profile.block_constants)
    blocks = [list(bl) for bl in model.partition.blocks]
    # inside a block all budget goes to the coordinate with the flattest growth
    ab = np.array([a[idx].min() for idx in blocks])
    bb = np.array([b[idx].min() for idx in blocks])
    dominated = all(
        np.any((a[idx] == ab[i]) & (b[idx] == bb[i])) for i, idx in enumerate(blocks)
    )
    if p > 2:
        raise ValueError("block concentration argument needs growth exponent <= 2")
    upper, lower = _radius_allocation(F, np.power(L, beta), ab, p, bb, q)
    if not (exact and dominated):
        lower = 0.0
    return upper ** (1.0 / q), lower ** (1.0 / q)


def level_set_radius(model: ObjectiveModel, x0, beta: float, q: float) -> float:
    """``max{ ||y - x*||_{beta,q} : f(y) <= f(x0) }`` for the separable families.

    Uses the per-coordinate growth model of the objective: within a block
    the farthest point of the sublevel set concentrates on one coordinate,
    and the split of the level budget across blocks is solved through its
    Lagrangian dual.  The returned value is the dual (upper) bound, which
    is exact for every built-in convex family and conservative for the
    nonconvex one.
    """
    return level_set_radius_bounds(model, x0, beta, q)[0]


# ---------------------------------------------------------------------------
# bound specifications


@dataclass(frozen=True)
class BoundSpec:
    theorem: Theorem
    profile: HolderProfile
    alpha: float
    initial_gap: float
    radius_R: float | None = None
    exponent_convention: ExponentConvention = ExponentConvention.AS_PRINTED
    sigma: float | None = None
    s_alpha_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        object.__setattr__(self, "exponent_convention", ExponentConvention(self.exponent_convention))
        if self.initial_gap < 0:
            raise ValueError("initial gap must be nonnegative")
        if self.radius_R is not None and self.radius_R < 0:
            raise ValueError("radius must be nonnegative")
        nu = self.nu
        if self.theorem is Theorem.STRONGLY_CONVEX_LINEAR_T3A and nu != 2.0:
            raise ValueError("the linear-rate bound needs nu = 2 (gamma = 1)")
        if self.theorem is Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B and not nu > 2.0:
            raise ValueError("the sublinear strongly convex bound needs nu > 2 (gamma < 1)")
        if self.theorem in (
            Theorem.STRONGLY_CONVEX_LINEAR_T3A, Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B, Theorem.INTERPOLATION_C1,
        ) and self.sigma_value is None:
            raise ValueError("strongly convex bounds need sigma")

    @property
    def nu(self) -> float:
        return self.profile.nu

    @property
    def m(self) -> int:
        return self.profile.m

    @property
    def s_alpha(self) -> float:
        if self.s_alpha_override is not None:
            return float(self.s_alpha_override)
        return self.profile.s_alpha(self.alpha)

    @property
    def sigma_value(self) -> float | None:
        if self.sigma is not None:
            return float(self.sigma)
        return self.profile.strong_convexity(self.alpha)

    def _R(self) -> float:
        if self.radius_R is None:
            raise ValueError(f"{self.theorem.value} needs the sublevel radius R")
        return float(self.radius_R)

    def with_convention(self, convention: ExponentConvention | str, radius_R: float) -> "BoundSpec":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(exponent_convention=ExponentConvention(convention), radius_R=radius_R)
        return BoundSpec(**d)


def make_bound_spec(
    model: ObjectiveModel,
    x0,
    alpha: float,
    theorem: Theorem | str,
    convention: ExponentConvention | str = ExponentConvention.AS_PRINTED,
    s_alpha_scale: float = 1.0,
) -> BoundSpec:
    """Bound specification for running the method on ``model`` from ``x0``."""
    theorem = Theorem(theorem)
    convention = ExponentConvention(convention)
    prof = model.profile
    gap = float(model.value(x0) - model.optimum_value)
    if theorem is not Theorem.NONCONVEX_T1 and model.convexity is ConvexityClass.NONCONVEX:
        raise ValueError(f"{theorem.value} needs a convex objective, got {model.name}")
    if theorem in (Theorem.STRONGLY_CONVEX_LINEAR_T3A, Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B,
                   Theorem.INTERPOLATION_C1) and model.convexity is not ConvexityClass.STRONGLY_CONVEX:
        raise ValueError(f"{theorem.value} needs a strongly convex objective, got {model.name}")
    R = None
    if theorem is not Theorem.NONCONVEX_T1:
        beta, q = radius_exponents(prof.nu, alpha, convention)
        R = level_set_radius(model, x0, beta, q)
    override = None if s_alpha_scale == 1.0 else s_alpha_scale * prof.s_alpha(alpha)
    return BoundSpec(theorem, prof, alpha, gap, R, convention, None, override)


# ---------------------------------------------------------------------------
# closed-form bounds


def bound_T1(spec: BoundSpec, k: int) -> float:
    """``min_{j<=k} E||grad f(x^j)||_{1+alpha-nu,nu} <= (nu S_alpha gap/(k+1))^(1/nu)``."""
    nu = spec.nu
    return (nu * spec.s_alpha * spec.initial_gap / (k + 1)) ** (1.0 / nu)


def bound_T1_euclidean(spec: BoundSpec, k: int, beta: float, form: str = "as_printed") -> float:
    """Same rate measured in ``||.||_{beta,2}``.

    ``as_printed`` divides by ``m^((nu-2)/(2nu))``; ``corrected`` multiplies,
    which is what the norm equivalence constants actually give.
    """
    nu, alpha = spec.nu, spec.alpha
    L = np.asarray(spec.profile.block_constants)
    pref = float(np.max(np.power(L, beta / 2.0 - (1.0 + alpha - nu) / nu)))
    mfac = spec.m ** ((nu - 2.0) / (2.0 * nu))
    pref = pref / mfac if form == "as_printed" else pref * mfac
    return pref * bound_T1(spec, k)


def bound_T2(spec: BoundSpec, k: int) -> float:
    nu = spec.nu
    R = spec._R()
    S = spec.s_alpha
    num = (nu * S * R**nu) ** (1.0 / (nu - 1.0)) * (nu - 1.0)
    den = (2.0 * nu ** (nu - 1.0) + (nu - 1.0) ** nu * k) ** (1.0 / (nu - 1.0))
    return num / den


def level_set_gap_constant(nu: float, s_alpha: float, R: float) -> float:
    """``(nu S/2)^(1/(nu-1)) ((nu-1)/nu) R^(nu/(nu-1))``."""
    return (nu * s_alpha / 2.0) ** (1.0 / (nu - 1.0)) * ((nu - 1.0) / nu) * R ** (nu / (nu - 1.0))


def t3_gap_constant(nu: float, s_alpha: float, R: float) -> float:
    """``S^(1/(nu-1)) (nu-1) R^(nu/(nu-1)) / (nu^((nu-2)/nu) 2^(1/(nu-1)))``.

    The initial-gap estimate both strongly convex bounds are stated with.
    It dominates :func:`level_set_gap_constant` for every ``nu >= 2``.
    """
    return s_alpha ** (1.0 / (nu - 1.0)) * (nu - 1.0) * R ** (nu / (nu - 1.0)) / (
        nu ** ((nu - 2.0) / nu) * 2.0 ** (1.0 / (nu - 1.0))
    )


def strong_convexity_theta(spec: BoundSpec, nu: float | None = None, form: str = "as_printed") -> float:
    """Recurrence coefficient of the sublinear strongly convex bound.

    ``as_printed``: ``(2 sigma)^(nu/2) min_i L_i^e / (nu S m^((nu-2)/(2nu)))``
    with ``e = (alpha+1)(2-nu)/(2nu)``.  ``corrected`` raises the whole
    norm-equivalence factor ``m^(1/nu-1/2) min_i L_i^e`` to the power ``nu``,
    which is what the descent recurrence actually needs.  ``nu`` may be
    overridden for the interpolation limit.
    """
    nu = spec.nu if nu is None else nu
    L = np.asarray(spec.profile.block_constants)
    e = (spec.alpha + 1.0) * (2.0 - nu) / (2.0 * nu)
    minL = float(np.min(np.power(L, e)))
    lead = (2.0 * spec.sigma_value) ** (nu / 2.0) / (nu * spec.s_alpha)
    if form == "as_printed":
        return lead * minL / spec.m ** ((nu - 2.0) / (2.0 * nu))
    if form == "corrected":
        return lead * (spec.m ** (1.0 / nu - 0.5) * minL) ** nu
    raise ValueError(f"unknown form {form!r}")


def t3b_constants(spec: BoundSpec, form: str = "as_printed") -> tuple[float, float, float]:
    """``(C0, C1, C2)`` of the sublinear strongly convex bound.

    ``corrected`` re-derives C1 from the unsimplified rate with the gap
    replaced by :func:`t3_gap_constant`; the printed C1 differs from it by a
    factor of 2 and in the power of S_alpha.
    """
    nu, S, m, R = spec.nu, spec.s_alpha, spec.m, spec._R()
    sigma = spec.sigma_value
    L = np.asarray(spec.profile.block_constants)
    minL = float(np.min(np.power(L, (spec.alpha + 1.0) * (2.0 - nu) / (2.0 * nu))))
    C0 = (2.0 * nu * S) ** (2.0 / (nu - 2.0)) * m ** (1.0 / nu) * (nu - 1.0) * R ** (nu / (nu - 1.0))
    C2 = (R ** (nu * (nu - 2.0) / (2.0 * (nu - 1.0))) * (nu - 1.0) ** ((nu - 2.0) / 2.0)
          * (nu - 2.0) * (2.0 * sigma) ** (nu / 2.0) * minL)
    common = 2.0 ** ((nu - 2.0) / (2.0 * (nu - 1.0))) * m ** ((nu - 2.0) / (2.0 * nu)) * nu ** (
        (nu * nu - 2.0 * nu + 4.0) / (2.0 * nu))
    if form == "as_printed":
        C1 = common * S ** ((nu - 1.0) / nu)
    elif form == "corrected":
        C1 = 2.0 * common * S ** (nu / (2.0 * (nu - 1.0)))
        x = (nu - 2.0) / 2.0
        C2 = x * strong_convexity_theta(spec, nu, "corrected") * C0**x
    else:
        raise ValueError(f"unknown form {form!r}")
    return C0, C1, C2


def t3b_rate(spec: BoundSpec, k: int, gap: float | None = None, nu: float | None = None,
             theta_form: str = "as_printed") -> float:
    """The unsimplified sublinear bound ``gap / [1 + (nu-2)/2 theta gap^((nu-2)/2) k]^(2/(nu-2))``.

    ``gap`` defaults to :func:`t3_gap_constant`, i.e. the form the simplified
    constants are derived from.  Evaluated in log space so it stays accurate
    as ``nu -> 2``.
    """
    nu = spec.nu if nu is None else nu
    if gap is None:
        gap = t3_gap_constant(nu, spec.s_alpha, spec._R())
    if gap == 0 or k == 0:
        return float(gap)
    x = (nu - 2.0) / 2.0
    theta = strong_convexity_theta(spec, nu, theta_form)
    if x == 0.0:
        return float(gap * math.exp(-theta * k))
    z = x * theta * gap**x * k
    return float(gap * math.exp(-math.log1p(z) / x))


def bound_T3(spec: BoundSpec, k: int, form: str = "as_printed") -> float:
    nu = spec.nu
    if spec.theorem not in (Theorem.STRONGLY_CONVEX_LINEAR_T3A, Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B):
        raise ValueError(f"bound_T3 does not apply to {spec.theorem.value}")
    if nu == 2.0:
        S, sigma = spec.s_alpha, spec.sigma_value
        if sigma > S:
            raise ValueError("the linear rate needs sigma <= S_alpha")
        return (1.0 - sigma / S) ** k * t3_gap_constant(nu, S, spec._R())
    C0, C1, C2 = t3b_constants(spec, form)
    return C0 / (C1 + C2 * k) ** (2.0 / (nu - 2.0))


def bound_interpolation(spec: BoundSpec, k: int, nu_sequence: Sequence[float]) -> list[float]:
    """Sublinear strongly convex bound with the true gap, at each ``nu > 2`` given."""
    out = []
    for nu in nu_sequence:
        if not nu > 2.0:
            raise ValueError("interpolation values need nu > 2")
        out.append(t3b_rate(spec, k, gap=spec.initial_gap, nu=nu))
    return out


def interpolation_limit(spec: BoundSpec, k: int) -> float:
    """``exp(-sigma k / S_alpha) * gap``, the nu -> 2 limit of :func:`bound_interpolation`."""
    return math.exp(-spec.sigma_value * k / spec.s_alpha) * spec.initial_gap


def recurrence_bound(A0: float, theta: float, r: float, k: int) -> float:
    """Bound on ``A_k`` for nonnegative ``A_{k+1} <= A_k - theta A_k^r``."""
    if not r > 1:
        raise ValueError("r must exceed 1")
    if A0 < 0 or theta < 0:
        raise ValueError("A0 and theta must be nonnegative")
    if A0 == 0:
        return 0.0
    return A0 / (1.0 + (r - 1.0) * theta * A0 ** (r - 1.0) * k) ** (1.0 / (r - 1.0))


def evaluate_bound(spec: BoundSpec, k: int, form: str = "as_printed") -> float:
    """Bound for ``spec.theorem`` at ``k``; ``form`` only affects the sublinear strongly convex case."""
    t = spec.theorem
    if t is Theorem.NONCONVEX_T1:
        return bound_T1(spec, k)
    if t is Theorem.CONVEX_T2:
        return bound_T2(spec, k)
    if t is Theorem.INTERPOLATION_C1:
        return t3b_rate(spec, k, gap=spec.initial_gap)
    return bound_T3(spec, k, form)


# ---------------------------------------------------------------------------
# level-set gap bound and co-coercivity


def level_set_gap_bound(model: ObjectiveModel, x, alpha: float,
                 exponent_convention: ExponentConvention | str = ExponentConvention.AS_PRINTED) -> float:
    """Right-hand side of ``f(x) - f* <= (nu S/2)^(1/(nu-1)) ((nu-1)/nu) R(x)^(nu/(nu-1))``."""
    if model.convexity is ConvexityClass.NONCONVEX:
        raise ValueError("the level-set bound needs a convex objective")
    prof = model.profile
    beta, q = radius_exponents(prof.nu, alpha, exponent_convention)
    R = level_set_radius(model, x, beta, q)
    return level_set_gap_constant(prof.nu, prof.s_alpha(alpha), R)


def cocoercivity_terms(model: ObjectiveModel, alpha: float, x, y,
                       exponent_convention: ExponentConvention | str = ExponentConvention.AS_PRINTED
                       ) -> tuple[float, float]:
    """``(lhs, rhs)`` of ``2/(nu S) ||grad f(x)-grad f(y)||^(nu-1) <= ||x-y||_{beta,q}``."""
    prof = model.profile
    nu = prof.nu
    part = model.partition
    dg = part.block_norms(model.gradient(x) - model.gradient(y))
    lhs = 2.0 / (nu * prof.s_alpha(alpha)) * float(
        norm_from_block_norms(dg, prof.block_constants, decrease_norm_exponent(nu, alpha), nu)
    ) ** (nu - 1.0)
    beta, q = radius_exponents(nu, alpha, exponent_convention)
    rhs = float(norm_from_block_norms(part.block_norms(np.asarray(x) - np.asarray(y)), prof.block_constants, beta, q))
    return lhs, rhs


def holder_cocoercivity_check(model: ObjectiveModel, alpha: float, x, y,
                              exponent_convention: ExponentConvention | str = ExponentConvention.AS_PRINTED,
                              rtol: float = 1e-9) -> bool:
    lhs, rhs = cocoercivity_terms(model, alpha, x, y, exponent_convention)
    return lhs <= rhs * (1.0 + rtol) + 1e-300


# ---------------------------------------------------------------------------
# certification


@dataclass
class CertRow:
    k: int
    observed: float
    bound: float
    slack: float
    tolerance: float
    ok: bool


@dataclass
class CertificationReport:
    theorem: str
    convention: str
    source: str
    rows: list[CertRow]
    alongside: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def min_slack(self) -> float:
        return min(r.slack for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "convention": self.convention,
            "source": self.source,
            "passed": self.passed,
            "min_slack": self.min_slack,
            "rows": [asdict(r) for r in self.rows],
            "alongside": self.alongside,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    def table(self) -> str:
        lines = [f"{self.theorem} [{self.convention}, {self.source}]: {'PASS' if self.passed else 'FAIL'}",
                 f"{'k':>4} {'observed':>14} {'bound':>14} {'slack':>12}"]
        for r in self.rows:
            lines.append(f"{r.k:>4} {r.observed:>14.6e} {r.bound:>14.6e} {r.slack:>12.4e}{'' if r.ok else '  <-- violated'}")
        return "\n".join(lines)


def _slack(bound: float, observed: float) -> float:
    if bound > 1.0:
        return (bound - observed) / bound
    return bound - observed


def certify_run(source: ExpectationResult | Sequence[RunTrace], spec: BoundSpec,
                optimum_value: float = 0.0, sigmas: float = 4.0,
                form: str = "as_printed") -> CertificationReport:
    """Compare observed expectations against the bound at every ``k``.

    Exact (tree) expectations must satisfy the bound with zero tolerance;
    Monte Carlo means get ``sigmas`` standard errors.
    """
    if not isinstance(source, ExpectationResult):
        source = monte_carlo_expectation(source)
    if spec.theorem is Theorem.NONCONVEX_T1:
        observed = np.minimum.accumulate(source.grad_norm)
        argmin = [int(np.argmin(source.grad_norm[: k + 1])) for k in range(len(observed))]
        se = None if source.se_grad_norm is None else source.se_grad_norm[argmin]
    else:
        observed = source.mean_f - optimum_value
        se = source.se_f
    rows = []
    for k, obs in enumerate(observed):
        b = evaluate_bound(spec, k, form)
        tol = 0.0 if source.exact else sigmas * float(se[k])
        slack = _slack(b, obs)
        tol_s = tol / b if b > 1.0 else tol
        rows.append(CertRow(k, float(obs), float(b), float(slack), float(tol_s), bool(slack >= -tol_s)))
    return CertificationReport(spec.theorem.value, spec.exponent_convention.value,
                               "tree" if source.exact else f"monte_carlo[{source.samples}]", rows)


def contraction_check(model: ObjectiveModel, alpha: float, x, rtol: float = 1e-9) -> tuple[float, float, bool]:
    """One-step linear contraction ``E[f(x+)|x] - f* <= (1 - sigma/S)(f(x) - f*)``.

    Returns ``(lhs, rhs, holds)``.
    """
    prof = model.profile
    sigma = prof.strong_convexity(alpha)
    if sigma is None:
        raise ValueError("contraction needs a strongly convex model")
    gap = model.value(x) - model.optimum_value
    lhs = gap - exact_conditional_decrease(model, alpha, x)
    rhs = (1.0 - sigma / prof.s_alpha(alpha)) * gap
    return lhs, rhs, lhs <= rhs + rtol * max(abs(gap), 1e-300)
