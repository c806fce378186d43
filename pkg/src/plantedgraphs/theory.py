"""Thresholds, Galton-Watson recursions and second-moment bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateSpectrumError, InvalidParameterError, InvalidRegimeError

# below this value psi_D is summed from the upper tail
_UPPER_TAIL_SWITCH = 1e-8


def _poisson_log_pmf(j, mu):
    return -mu + j * math.log(mu) - math.lgamma(j + 1)


def psi_d(mu, D):
    """P(Poisson(mu) >= D)."""
    if mu < 0 or math.isnan(mu):
        raise InvalidParameterError(f"mu must be >= 0, got {mu}")
    if D < 0:
        raise InvalidParameterError(f"D must be >= 0, got {D}")
    if D == 0:
        return 1.0
    if mu == 0:
        return 0.0
    if math.isinf(mu):
        return 1.0
    if D == 1:
        return -math.expm1(-mu)
    # lower CDF: 1 - sum_{j<D} pmf(j)
    lower = math.fsum(math.exp(_poisson_log_pmf(j, mu)) for j in range(D))
    val = 1.0 - lower
    if val > _UPPER_TAIL_SWITCH:
        return val
    # upper tail sum of pmf(j), j >= D; terms decay geometrically once j > mu
    terms = []
    j = D
    while True:
        t = math.exp(_poisson_log_pmf(j, mu))
        terms.append(t)
        if t == 0.0 or (j > mu and t < 1e-18 * terms[0]):
            break
        j += 1
    return math.fsum(terms)


@dataclass(frozen=True)
class GwSequence:
    D: int
    lam: float
    p: tuple  # p[0] is p_1

    def __getitem__(self, h):
        """``p_h`` with the 1-based index used in the recursion."""
        if h < 1:
            raise IndexError(h)
        return self.p[h - 1]


def gw_sequence(D, lam, h_max):
    """``p_1 = 1``, ``p_{h+1} = psi_D(lam * p_h)`` up to ``p_{h_max}``."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if h_max < 1:
        raise InvalidParameterError(f"h_max must be >= 1, got {h_max}")
    p = [1.0]
    for _ in range(h_max - 1):
        p.append(psi_d(lam * p[-1], D))
    return GwSequence(D=D, lam=float(lam), p=tuple(p))


def _fixed_point_gap(D, lam):
    """Maximise ``f(p) = psi_D(lam*p) - p`` over ``[0, 1]``.

    ``psi_D`` is convex for ``mu < D-1`` and concave beyond, so ``f`` is convex
    then concave; its only interior maximum lies in the concave part.
    """
    def f(p):
        return psi_d(lam * p, D) - p

    lo = min(1.0, max(0.0, (D - 1) / lam))
    res = minimize_scalar(lambda p: -f(p), bounds=(lo, 1.0), method="bounded",
                          options={"xatol": 1e-14})
    best_p, best = float(res.x), -float(res.fun)
    if f(lo) > best:
        best_p, best = lo, f(lo)
    return best_p, best


def p_star(D, lam, tol=1e-12):
    """Largest root of ``p = psi_D(lam * p)`` in ``[0, 1]``.

    Returns 0 when no positive root exists. Otherwise the root is bracketed
    between the maximiser of ``psi_D(lam*p) - p`` and 1, and solved to ``tol``.
    """
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if not tol > 0:
        raise InvalidParameterError(f"tol must be > 0, got {tol}")
    if D == 0:
        return 1.0
    p_max, gap = _fixed_point_gap(D, lam)
    if gap <= 0.0:
        return 0.0
    f = lambda p: psi_d(lam * p, D) - p  # noqa: E731
    if f(1.0) >= 0.0:
        return 1.0
    return brentq(f, p_max, 1.0, xtol=tol, rtol=4 * np.finfo(float).eps)


def p_star_iterate(D, lam, tol=1e-12, max_iter=1_000_000, zero_cut=1e-10):
    """``p_star`` by plain iteration of the recursion from ``p = 1``.

    Converges monotonically but slowly near ``lambda_D``; values below
    ``zero_cut`` are reported as 0.
    """
    p = 1.0
    for _ in range(max_iter):
        nxt = psi_d(lam * p, D)
        if nxt < zero_cut:
            return 0.0
        if abs(p - nxt) <= tol:
            return nxt
        p = nxt
    return p


def lambda_d(D, tol=1e-9):
    """``sup{lam > 0 : p_star(D, lam) = 0}`` by bisection on ``[tiny, D*e + 10]``."""
    if D < 1:
        raise InvalidParameterError(f"D must be >= 1, got {D}")
    if not tol > 0:
        raise InvalidParameterError(f"tol must be > 0, got {tol}")
    lo, hi = 1e-9, D * math.e + 10.0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if p_star(D, mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DaryThresholds:
    h_under: int
    h_bar: int

    @property
    def gap(self):
        return self.h_bar - self.h_under


def dary_thresholds(D, lam, n, lam_crit=None):
    """``h_bar = inf{h : p_h < 1/n}`` and ``h_under = sup{h : p_h > ln(n)/n}``."""
    if n < 3:
        raise InvalidParameterError(f"n must be >= 3, got {n}")
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    crit = lambda_d(D) if lam_crit is None else lam_crit
    if lam >= crit:
        raise InvalidRegimeError(f"lambda={lam} is not below lambda_D={crit:.6f}; p_h does not vanish")
    lo_cut = 1.0 / n
    hi_cut = math.log(n) / n
    p, h = 1.0, 1
    h_under = None
    while p >= lo_cut:
        if p > hi_cut:
            h_under = h
        h += 1
        p = psi_d(lam * p, D)
        if h > 10_000:
            raise InvalidRegimeError("p_h did not fall below 1/n within 10000 steps")
    return DaryThresholds(h_under=h_under if h_under is not None else 0, h_bar=h)


def line_threshold(lam, n):
    """``ln(n) / ln(1/lam)``; the detectability boundary for planted paths when lam < 1."""
    if not 0 < lam < 1:
        raise InvalidRegimeError(f"line threshold needs 0 < lambda < 1, got {lam}")
    return math.log(n) / math.log(1.0 / lam)


def star_threshold(n):
    """``ln(n) / ln(ln(n))``, defined for ``n > e``."""
    if not n > math.e:
        raise InvalidParameterError(f"n must exceed e, got {n}")
    return math.log(n) / math.log(math.log(n))


# ---------------------------------------------------------------------------
# Second-moment bound for planted paths


def transition_matrix(n, K):
    """Transition matrix P of the dominating chain on states (-1, 0, 1)."""
    npr = n - K
    a = K / npr
    return np.array(
        [
            [1 - a, a, 0.0],
            [1 - a, (K - 2) / npr, 2 / npr],
            [1 - a, (K - 1) / npr, 1 / npr],
        ]
    )


def weighted_matrix(n, K, lam):
    """P with the transitions into state 1 multiplied by ``x = n/lam``."""
    M = transition_matrix(n, K)
    M[:, 2] *= n / lam
    return M


def initial_row(n, K, lam):
    npr = n - K
    a = K / npr
    x = n / lam
    return np.array([1 - a, a * (1 - 2 / npr), x * a * (2 / npr)])


def m0_matrix(lam):
    return np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 2.0 / lam], [1.0, 0.0, 1.0 / lam]])


@dataclass(frozen=True)
class M0Eigensystem:
    eigenvalues: tuple
    left_eigenvectors: tuple
    residual: float


def m0_eigensystem(lam):
    """Analytic eigenpairs ``(0, (1,1,-2))``, ``(1/lam, (-lam/(lam-1),0,1))``, ``(1, (1,0,0))``."""
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if lam == 1:
        raise DegenerateSpectrumError("lambda = 1: eigenvalues 1/lambda and 1 coincide")
    vals = (0.0, 1.0 / lam, 1.0)
    vecs = ((1.0, 1.0, -2.0), (-lam / (lam - 1.0), 0.0, 1.0), (1.0, 0.0, 0.0))
    M0 = m0_matrix(lam)
    res = max(float(np.max(np.abs(np.asarray(u) @ M0 - r * np.asarray(u)))) for r, u in zip(vals, vecs))
    if res > 1e-12:
        raise AssertionError(f"eigen residual {res} exceeds 1e-12")
    return M0Eigensystem(eigenvalues=vals, left_eigenvectors=vecs, residual=res)


@dataclass(frozen=True)
class MarkovBoundReport:
    n: int
    K: int
    lam: float
    M: np.ndarray = field(repr=False)
    F1: np.ndarray = field(repr=False)
    bound: float
    eigvals_M: tuple
    eigvals_M0: tuple
    degenerate: bool

    def to_dict(self):
        return {
            "n": self.n,
            "K": self.K,
            "lambda": self.lam,
            "M": self.M.tolist(),
            "F1": self.F1.tolist(),
            "bound": self.bound,
            "eigvals_M": list(self.eigvals_M),
            "eigvals_M0": list(self.eigvals_M0),
            "degenerate": self.degenerate,
        }


def markov_bound_E0L2(n, K, lam):
    """Upper bound ``F(1) M^(K-2) e`` on E0[L^2] for a planted K-path.

    Computed by ``K-2`` row-vector products; matrix powers are never formed.
    """
    if not 2 < K < n:
        raise InvalidParameterError(f"need 2 < K < n, got K={K}, n={n}")
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    M = weighted_matrix(n, K, lam)
    F = initial_row(n, K, lam)
    F1 = F.copy()
    for _ in range(K - 2):
        F = F @ M
    bound = float(F.sum())
    ev = np.linalg.eigvals(M)
    ev = tuple(sorted(float(v.real) for v in ev))
    ev0 = tuple(sorted((0.0, 1.0 / lam, 1.0)))
    return MarkovBoundReport(
        n=n, K=K, lam=float(lam), M=M, F1=F1, bound=bound,
        eigvals_M=ev, eigvals_M0=ev0, degenerate=(lam == 1),
    )
