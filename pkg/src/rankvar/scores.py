"""Score functions on the unit ball and their covariance structure.

All three scores are spherical: J(u) = J(||u||) * u/||u||, with J the radial
function (sign: 1, spearman: r, van der Waerden: sqrt of the chi-square(d)
quantile), and J(0) = 0.  Under the spherical uniform U_d (uniform direction
times uniform radius) each score is centered and its d^2 x d^2 covariance
matrix C is (sigma1^2 sigma2^2 / d^2) I with sigma^2 the radial second
moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ._errors import InputError
from ._rng import stream
from .grid import BallGrid

__all__ = [
    "ScoreSpec",
    "eval_score",
    "grid_scores",
    "score_covariance",
    "mc_score_covariance",
    "centering",
    "chisq_cdf",
    "chisq_sf",
    "chisq_quantile",
]

_KINDS = ("sign", "spearman", "vdw")

# Radial second moments: integral of J(r)^2 dr on (0,1).
# sign: 1; spearman: 1/3; vdw: E[chi2_d] = d (as a function of d).


class ScoreError(InputError):
    """Invalid score evaluation request."""


@dataclass(frozen=True)
class ScoreSpec:
    """One of the three standard spherical scores.

    The same radial function is used in both slots J1 and J2, matching the
    statistics the tests implement.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ScoreError(f"unknown score kind {self.kind!r}; use one of {_KINDS}")

    def radial_second_moment(self, d: int) -> float:
        if self.kind == "sign":
            return 1.0
        if self.kind == "spearman":
            return 1.0 / 3.0
        return float(d)


def _reg_gamma(a: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Regularized incomplete gamma pair (P, Q), vectorized over x >= 0.

    Series expansion below the split point x = a + 1, Lentz continued
    fraction above it; each branch computes its numerically natural member
    and the other by complement.
    """
    x = np.asarray(x, dtype=float)
    p = np.zeros_like(x)
    q = np.ones_like(x)
    small = x < a + 1.0
    xs = x[small]
    if xs.size:
        term = np.ones_like(xs)
        total = np.ones_like(xs)
        ak = a
        for _ in range(500):
            ak += 1.0
            term = term * xs / ak
            total += term
            if np.all(np.abs(term) <= np.abs(total) * 1e-17):
                break
        with np.errstate(divide="ignore", invalid="ignore"):
            logpre = a * np.log(np.where(xs > 0, xs, 1.0)) - xs - math.lgamma(a + 1.0)
        ps = np.where(xs > 0, np.exp(logpre) * total, 0.0)
        p[small] = ps
        q[small] = 1.0 - ps
    xl = x[~small]
    if xl.size:
        tiny = 1e-300
        b = xl + 1.0 - a
        c = np.full_like(xl, 1e300)
        dd = 1.0 / np.where(np.abs(b) > tiny, b, tiny)
        h = dd.copy()
        for i in range(1, 1000):
            an = -i * (i - a)
            b = b + 2.0
            dd = an * dd + b
            dd = np.where(np.abs(dd) < tiny, tiny, dd)
            c = b + an / c
            c = np.where(np.abs(c) < tiny, tiny, c)
            dd = 1.0 / dd
            delta = dd * c
            h = h * delta
            if np.all(np.abs(delta - 1.0) < 1e-16):
                break
        qs = np.exp(a * np.log(xl) - xl - math.lgamma(a)) * h
        q[~small] = qs
        p[~small] = 1.0 - qs
    return np.clip(p, 0.0, 1.0), np.clip(q, 0.0, 1.0)


def chisq_cdf(x, df: float):
    """Chi-square(df) distribution function."""
    xx = np.asarray(x, dtype=float)
    p, _ = _reg_gamma(df / 2.0, np.maximum(xx, 0.0) / 2.0)
    return float(p) if np.isscalar(x) or xx.ndim == 0 else p


def chisq_sf(x, df: float):
    """Chi-square(df) survival function (upper tail)."""
    xx = np.asarray(x, dtype=float)
    _, q = _reg_gamma(df / 2.0, np.maximum(xx, 0.0) / 2.0)
    return float(q) if np.isscalar(x) or xx.ndim == 0 else q


def chisq_quantile(df: float, p):
    """Inverse chi-square(df) CDF.

    Newton iteration on the regularized lower incomplete gamma, started at
    the Wilson-Hilferty cube approximation; absolute tolerance 1e-10.
    """
    pp = np.asarray(p, dtype=float)
    scalar = np.isscalar(p) or pp.ndim == 0
    pp = np.atleast_1d(pp)
    if np.any((pp <= 0.0) | (pp >= 1.0)):
        raise ScoreError("probability must lie strictly in (0, 1)")
    a = df / 2.0
    z = ndtri(pp)
    c = 2.0 / (9.0 * df)
    x = df * np.maximum(1.0 - c + z * np.sqrt(c), 1e-4) ** 3
    x = np.maximum(x, 1e-12)
    lg = math.lgamma(a)
    for _ in range(200):
        cdf, _ = _reg_gamma(a, x / 2.0)
        with np.errstate(divide="ignore", over="ignore"):
            logpdf = (a - 1.0) * np.log(x / 2.0) - x / 2.0 - lg - math.log(2.0)
        pdf = np.maximum(np.exp(logpdf), 1e-300)
        xn = x - (cdf - pp) / pdf
        xn = np.where(xn <= 0.0, x / 2.0, xn)
        if np.all(np.abs(xn - x) < 1e-10):
            x = xn
            break
        x = xn
    return float(x[0]) if scalar else x


def _radial(kind: str, r: np.ndarray, d: int) -> np.ndarray:
    if kind == "sign":
        return np.where(r > 0, 1.0, 0.0)
    if kind == "spearman":
        return np.asarray(r, dtype=float)
    out = np.zeros_like(np.asarray(r, dtype=float))
    pos = r > 0
    if np.any(pos):
        out[pos] = np.sqrt(chisq_quantile(d, np.asarray(r, dtype=float)[pos]))
    return out


def eval_score(spec: ScoreSpec, which: int, f_value: np.ndarray, n_R: int) -> np.ndarray:
    """Score J_which evaluated at one F-value on a grid with n_R radii.

    The origin maps to the zero vector for all three scores.  For the vdW
    score the norm must sit on a grid radius j/(n_R+1) to within 1e-9.
    """
    if which not in (1, 2):
        raise ScoreError(f"which must be 1 or 2, got {which}")
    f = np.asarray(f_value, dtype=float)
    d = f.shape[0]
    r = float(np.linalg.norm(f))
    if r > n_R / (n_R + 1.0) + 1e-9:
        raise ScoreError(f"norm {r} exceeds the outermost grid radius")
    if r < 1e-12:
        return np.zeros(d)
    if spec.kind == "sign":
        return f / r
    if spec.kind == "spearman":
        return f.copy()
    j = round(r * (n_R + 1))
    if abs(r - j / (n_R + 1.0)) > 1e-9 or not 1 <= j <= n_R:
        raise ScoreError(f"norm {r} is not a grid radius for n_R={n_R}")
    return math.sqrt(chisq_quantile(d, j / (n_R + 1.0))) * (f / r)


def grid_scores(spec: ScoreSpec, which: int, grid: BallGrid) -> np.ndarray:
    """Scores of every gridpoint, as an (n, d) array.

    Radial values are computed once per distinct radius.
    """
    if which not in (1, 2):
        raise ScoreError(f"which must be 1 or 2, got {which}")
    if spec.kind == "spearman":
        return grid.points.copy()
    if spec.kind == "sign":
        return grid.point_signs.copy()
    n_R = grid.n_R
    radial_by_rank = np.zeros(n_R + 1)
    radial_by_rank[1:] = _radial(spec.kind, np.arange(1, n_R + 1) / (n_R + 1.0), grid.d)
    return radial_by_rank[grid.point_ranks][:, None] * grid.point_signs


def score_covariance(spec: ScoreSpec, d: int) -> np.ndarray:
    """Closed-form covariance C of vec(J1(u_t) J2(u_s)') under U_d.

    The spherical factorization gives C = (sigma1^2 sigma2^2 / d^2) I_{d^2}:
    identity for vdw, (1/d^2) I for sign, (1/(9 d^2)) I for spearman.
    """
    s2 = spec.radial_second_moment(d)
    return (s2 * s2 / d**2) * np.eye(d * d)


def mc_score_covariance(
    spec: ScoreSpec, d: int, n_draws: int = 10**6, seed: int = 0
) -> np.ndarray:
    """Monte Carlo estimate of C over U_d (validation path, custom scores).

    Uses two independent samples for the inner and outer integrals.
    """
    rng = stream(seed, 97, d)

    def sample(m):
        g = rng.standard_normal((m, d))
        u = g / np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.uniform(size=m)
        return _radial(spec.kind, r, d)[:, None] * u

    j2 = sample(n_draws)
    b = j2.T @ j2 / n_draws
    b_mean = j2.mean(0)
    j1 = sample(n_draws)
    a = j1.T @ j1 / n_draws
    a_mean = j1.mean(0)
    return np.kron(b, a) - np.kron(np.outer(b_mean, b_mean), np.outer(a_mean, a_mean))


def centering(spec: ScoreSpec, grid: BallGrid) -> np.ndarray:
    """Exact null mean m_a of every lag-i rank cross-covariance.

    Under the null the F-values are a uniform random permutation of the
    gridpoints, so for t != s the expectation of J1(F_t) J2(F_s)' is the
    average of J1(g_k) J2(g_l)' over ordered pairs of distinct gridpoints:

        [(sum_k J1(g_k)) (sum_l J2(g_l))' - sum_k J1(g_k) J2(g_k)'] / (n(n-1)),

    the origin copies dropping out since J(0) = 0.  On an origin-symmetric
    grid the product term vanishes because the scores are odd, but the
    diagonal correction never does; the matrix is O(1/n), not zero.
    """
    n = grid.n
    nz = n - grid.factorization.n_0
    j1 = grid_scores(spec, 1, grid)[:nz]
    j2 = grid_scores(spec, 2, grid)[:nz]
    total = np.outer(j1.sum(0), j2.sum(0)) - j1.T @ j2
    return total / (n * (n - 1.0))
