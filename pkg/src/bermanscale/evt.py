"""Limit laws, norming constants and desk-scale verification simulators.

Covers the Gumbel limit for maxima of scaled stationary triangular arrays
(with the extremal index correcting for clustering), the Hüsler–Reiss
bivariate limit for arrays whose cross-correlation approaches one at the
critical log-rate, and the missing-observation mixture where only a
fraction of the vectors is observed.  Norming constants come in three
flavours: classical Gaussian, power-tail scaled (regime A) and
Weibull-type scaled (regime B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from . import streams
from .errors import (
    BadEtaError,
    InvalidDeltaError,
    NotPSDError,
    ParamOutOfRangeError,
    RegimeMismatchError,
    ScheduleInvalidError,
    TruncationTooDeepError,
)
from .gaussian import CorrelationModel, correlate, hr_array_correlation
from .quadrature import adaptive_simpson, norm_cdf
from .scaling import REGIME_A, REGIME_B, ScalingModel


def gumbel(x) -> float:
    """Standard Gumbel CDF exp(-e^-x)."""
    return np.exp(-np.exp(-np.asarray(x, dtype=float))) if np.ndim(x) else math.exp(-math.exp(-x))


def tilted_gumbel(theta: float) -> Callable[[float], float]:
    """Gumbel CDF with clustering correction: exp(-theta e^-x)."""
    if not 0.0 < theta <= 1.0:
        raise ParamOutOfRangeError("extremal index must lie in (0, 1]")
    return lambda x: math.exp(-theta * math.exp(-x))


def husler_reiss(x: float, y: float, lam: float) -> float:
    """Hüsler–Reiss bivariate max-limit CDF H_lam(x, y).

    lam = 0 gives the comonotone limit Gumbel(min(x, y)); lam = inf gives
    the independence limit Gumbel(x) Gumbel(y).
    """
    if lam < 0:
        raise ParamOutOfRangeError("lambda must be in [0, inf]")
    if lam == 0.0:
        return float(gumbel(min(x, y)))
    if math.isinf(lam):
        return float(gumbel(x)) * float(gumbel(y))
    if x == -math.inf or y == -math.inf:
        return 0.0
    ex = 0.0 if x == math.inf else math.exp(-x) * norm_cdf(lam + (y - x) / (2.0 * lam))
    ey = 0.0 if y == math.inf else math.exp(-y) * norm_cdf(lam + (x - y) / (2.0 * lam))
    return math.exp(-ex - ey)


@dataclass(frozen=True)
class NormingConstants:
    """Affine norming u_n(x) = a x + b for one of the three regimes."""

    a: float
    b: float
    regime: str
    n: int
    params: dict = field(default_factory=dict)

    def u(self, x: float) -> float:
        return self.a * x + self.b

    def normalize(self, m):
        return (np.asarray(m, dtype=float) - self.b) / self.a


def _require_n(n: int) -> float:
    if n < 3:
        raise ParamOutOfRangeError(f"need n >= 3 so that ln ln n > 0, got {n}")
    return math.log(n)


def norming_classical(n: int) -> NormingConstants:
    """Classical Gaussian maxima norming."""
    ln = _require_n(n)
    a = 1.0 / math.sqrt(2.0 * ln)
    b = math.sqrt(2.0 * ln) - 0.5 * a * (math.log(ln) + math.log(4.0 * math.pi))
    return NormingConstants(a, b, "classical", n)


def norming_a(n: int, c: float, tau: float) -> NormingConstants:
    """Norming for maxima scaled by a power-tail law with exact constants (c, tau)."""
    ln = _require_n(n)
    if c <= 0 or tau < 0:
        raise ParamOutOfRangeError("need c > 0 and tau >= 0")
    a = 1.0 / math.sqrt(2.0 * ln)
    b = math.sqrt(2.0 * ln) + a * (
        math.log(c / math.sqrt(2.0 * math.pi) * math.gamma(1.0 + tau))
        - (2.0 * tau + 1.0) / 2.0 * (math.log(ln) + math.log(2.0))
    )
    return NormingConstants(a, b, "A", n, {"c": c, "tau": tau})


def norming_b(n: int, c_b: float, alpha: float, big_l: float, p: float) -> NormingConstants:
    """Norming for maxima scaled by a Weibull-type law."""
    ln = _require_n(n)
    if min(c_b, big_l, p) <= 0:
        raise ParamOutOfRangeError("need c_b, big_l, p > 0")
    q = (p * big_l) ** (1.0 / (2.0 + p))
    t = 0.5 * q * q + big_l * q ** (-p)
    varpi = c_b / math.sqrt(2.0 + p) * q ** (-alpha)
    a = (2.0 + p) / (2.0 * p) * t ** (-(2.0 + p) / (2.0 * p)) * ln ** ((2.0 - p) / (2.0 * p))
    b = (ln / t) ** ((2.0 + p) / (2.0 * p)) + a * (
        alpha / p * math.log(ln) - alpha / p * math.log(t) + math.log(varpi)
    )
    return NormingConstants(a, b, "B", n, {"c_b": c_b, "alpha": alpha, "big_l": big_l, "p": p, "t": t, "q": q, "varpi_b": varpi})


def norming_for_scaling(n: int, model: ScalingModel) -> NormingConstants:
    if model.regime == REGIME_A:
        return norming_a(n, model.c_a, model.tau)
    if model.regime == REGIME_B:
        return norming_b(n, model.c_b, model.alpha, model.big_l, model.p)
    return norming_classical(n)


@dataclass(frozen=True)
class LimitSpec:
    """A norming together with the limit CDF the normalized extremes target."""

    norming: NormingConstants
    target: Callable[[float], float]
    label: str


# ---------------------------------------------------------------------------
# extremal index


def w_covariance(delta: Sequence[float], i: int, j: int) -> float:
    """Covariance of the cluster field W at indices i, j >= 2.

    ``delta`` is the full rate sequence with delta[0] == 0.
    """
    d = np.asarray(delta, dtype=float)
    if d[0] != 0.0:
        raise InvalidDeltaError("delta sequence must start with delta_0 = 0")
    if i < 2 or j < 2:
        raise InvalidDeltaError("W is indexed from 2")
    di, dj = d[i - 1], d[j - 1]
    if di <= 0 or dj <= 0:
        raise InvalidDeltaError("delta_{k-1} must be positive for k >= 2")
    return float((di + dj - d[abs(i - j)]) / (2.0 * math.sqrt(di * dj)))


@dataclass(frozen=True)
class ExtremalIndexSpec:
    """Truncated event defining the clustering index.

    ``delta`` holds the positive rates delta_1, delta_2, ...; the implied
    delta_0 = 0 is prepended internally.  ``k_max`` truncates the
    intersection over k in {2, ..., k_max}; k_max = 1 is the empty event.
    """

    delta: tuple
    k_max: int

    def __post_init__(self):
        d = tuple(float(x) for x in self.delta)
        if d and d[0] == 0.0:
            d = d[1:]
        if any(x <= 0 for x in d):
            raise InvalidDeltaError("all delta_k (k >= 1) must be positive")
        object.__setattr__(self, "delta", d)
        if self.k_max < 1:
            raise ParamOutOfRangeError("k_max must be >= 1")
        if self.k_max > 1 and len(d) < self.k_max - 1:
            raise InvalidDeltaError(
                f"need delta_1..delta_{self.k_max - 1} for k_max={self.k_max}"
            )

    def full_delta(self) -> np.ndarray:
        return np.concatenate([[0.0], np.asarray(self.delta, dtype=float)])

    def w_matrix(self) -> np.ndarray:
        """Covariance matrix of (W_2, ..., W_k_max); raises NotPSD when invalid."""
        m = self.k_max - 1
        full = self.full_delta()
        cov = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                cov[i, j] = w_covariance(full, i + 2, j + 2)
        if np.max(np.abs(cov)) > 1.0 + 1e-12:
            raise NotPSDError("W covariance has entries outside [-1, 1]")
        return cov


@dataclass(frozen=True)
class ThetaEstimate:
    value: float
    stderr: float | None
    method: str
    reps: int | None = None
    seed: int | None = None


def extremal_index(
    spec: ExtremalIndexSpec,
    method: str = "mc",
    reps: int = 10**6,
    seed: int = 0,
    stream: int = 0,
    workers: int = 1,
    tol: float = 1e-10,
) -> ThetaEstimate:
    """Clustering index P(E/2 + sqrt(delta_{k-1}) W_k <= delta_{k-1}, 2 <= k <= k_max).

    ``method='quad1d'`` integrates the single-constraint case (k_max = 2)
    exactly: int_0^inf e^-t Phi((delta_1 - t/2) / sqrt(delta_1)) dt.
    ``method='mc'`` samples (E, W) for any truncation depth up to 50.
    """
    if spec.k_max > 50:
        raise TruncationTooDeepError(f"k_max={spec.k_max} > 50")
    if spec.k_max == 1:
        return ThetaEstimate(1.0, 0.0, method)

    if method == "quad1d":
        if spec.k_max != 2:
            raise ParamOutOfRangeError("quad1d oracle applies to k_max = 2 only")
        d1 = spec.delta[0]
        rd = math.sqrt(d1)

        def f(t):
            return math.exp(-t) * norm_cdf((d1 - 0.5 * t) / rd)

        val, _ = adaptive_simpson(f, 0.0, 60.0, tol, points=[1.0, 4.0, 10.0, 25.0])
        return ThetaEstimate(float(val), None, "quad1d")

    if method != "mc":
        raise ParamOutOfRangeError(f"unknown method {method!r}")

    cov = spec.w_matrix()
    try:
        chol = np.linalg.cholesky(cov + 1e-12 * np.eye(len(cov)))
    except np.linalg.LinAlgError as exc:
        raise NotPSDError("W covariance is not positive semidefinite") from exc
    m = spec.k_max - 1
    sq = np.sqrt(np.asarray(spec.delta[:m], dtype=float))
    words = m + 1

    def work(chunk, start, rows):
        u = streams.uniform_block(seed, stream, chunk, rows, words)
        w = ndtri(u[:, :m]) @ chol.T
        e = -np.log1p(-u[:, m])
        thr = sq[None, :] - e[:, None] / (2.0 * sq[None, :])
        ind = np.all(w <= thr, axis=1).astype(float)
        return float(ind.sum()), float((ind * ind).sum())

    parts = streams.map_chunks(work, reps, workers, rows=streams.rows_per_chunk(words))
    est, se = streams.mean_and_stderr([p[0] for p in parts], [p[1] for p in parts], reps)
    return ThetaEstimate(est, se, "mc", reps, seed)


# ---------------------------------------------------------------------------
# desk-scale simulators


@dataclass(frozen=True)
class ArrayMaximaResult:
    """Normalized maxima sample from a scaled stationary triangular-array row."""

    sample: np.ndarray
    norming: NormingConstants
    model: CorrelationModel
    delta: tuple
    cutoff: int


def simulate_array_maxima(
    delta: Sequence[float],
    cutoff: int,
    scaling: ScalingModel,
    n: int,
    reps: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> ArrayMaximaResult:
    """Draws of (M_n - b_n)/a_n where M_n = max_i S_i X_{n,i}.

    The row is a stationary Gaussian sequence with lag-j correlation
    1 - delta_j / ln n up to ``cutoff`` (uncorrelated beyond); each
    coordinate carries its own scaling draw.  The limit CDF is the
    theta-tilted Gumbel exp(-theta e^-x).
    """
    if scaling.regime != REGIME_A:
        raise RegimeMismatchError("array-maxima simulation requires regime-A scaling")
    model = hr_array_correlation(delta, n, cutoff)
    norming = norming_a(n, scaling.c_a, scaling.tau)
    words = 2 * n

    def work(chunk, start, rows):
        u = streams.uniform_block(seed, stream, chunk, rows, words)
        z = ndtri(u[:, :n])
        x = correlate(model, z)
        s = np.asarray(scaling.ppf(u[:, n:]), dtype=float)
        return (s * x).max(axis=1)

    parts = streams.map_chunks(work, reps, workers, rows=streams.rows_per_chunk(words))
    sample = norming.normalize(np.concatenate(parts))
    return ArrayMaximaResult(sample, norming, model, tuple(float(d) for d in delta), cutoff)


@dataclass(frozen=True)
class HRSpec:
    """Bivariate array schedule: within-pair correlation approaching 1.

    ``lam`` in [0, inf]; the schedule lambda_0(n) = 1 - 2 lam^2 a_n / b_n
    satisfies (b_n/a_n)(1 - lambda_0(n)) = 2 lam^2 exactly.  Cross-serial
    correlations default to zero (the comparison array of the limit
    theorem); ``sigma`` and ``beta`` are validated when supplied.
    """

    lam: float
    sigma: float = 0.0
    beta: float | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ParamOutOfRangeError("lambda must be in [0, inf]")
        if not 0.0 <= self.sigma < 1.0:
            raise ParamOutOfRangeError("sigma must be in [0, 1)")

    def beta_range(self, p: float) -> tuple[float, float]:
        return 0.0, 2.0 * (1.0 + self.sigma) ** (-p / (2.0 + p)) - 1.0

    def validate_beta(self, p: float) -> None:
        if self.beta is None:
            return
        lo, hi = self.beta_range(p)
        if not lo < self.beta < hi:
            raise ParamOutOfRangeError(f"beta must lie in ({lo}, {hi:.6g}) for p={p}")

    def lambda0(self, norming: NormingConstants) -> float:
        if math.isinf(self.lam):
            return 0.0
        lam0 = 1.0 - 2.0 * self.lam**2 * norming.a / norming.b
        if not -1.0 <= lam0 <= 1.0:
            raise ParamOutOfRangeError(
                f"lambda={self.lam} forces lambda_0(n)={lam0:.4g} outside [-1, 1] at n={norming.n}"
            )
        return lam0


@dataclass(frozen=True)
class MissingDataSpec:
    """Observation-indicator law with a constant limiting fraction eta."""

    kind: str  # "deterministic" | "bernoulli" | "full"
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("deterministic", "bernoulli", "full"):
            raise BadEtaError(f"unknown mask kind {self.kind!r}")
        if not 0.0 < self.eta <= 1.0:
            raise BadEtaError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def consumes_words(self) -> bool:
        return self.kind == "bernoulli"


@dataclass(frozen=True)
class BivariateMissingResult:
    """Normalized componentwise extremes under a missing-observation mask.

    ``max_obs``/``min_obs`` are over observed vectors only; minima are
    reported as (-m - b)/a so every marginal targets the same limit.
    """

    max_obs: np.ndarray
    min_obs: np.ndarray
    max_full: np.ndarray
    min_full: np.ndarray
    norming: NormingConstants
    lambda0: float
    eta: float


def simulate_bivariate_missing(
    hr: HRSpec,
    scaling: ScalingModel,
    miss: MissingDataSpec,
    n: int,
    reps: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> BivariateMissingResult:
    """Componentwise extremes of a scaled bivariate iid-in-k array.

    Each index k carries a Gaussian pair with correlation lambda_0(n) and a
    single Weibull-type scaling draw multiplying both components; the
    mask (when not 'full') hides a fraction of the indices.  Under the
    Hüsler–Reiss schedule the normalized maxima pair targets H_lambda and
    the observed/full joint law targets the eta-mixture of H powers.
    """
    if scaling.regime != REGIME_B:
        raise RegimeMismatchError("bivariate simulation requires regime-B scaling")
    norming = norming_for_scaling(n, scaling)
    hr.validate_beta(scaling.p)
    lam0 = hr.lambda0(norming)
    root = math.sqrt(max(0.0, 1.0 - lam0 * lam0))
    mask_words = n if miss.consumes_words else 0
    words = 3 * n + mask_words
    n_obs_det = max(1, round(miss.eta * n)) if miss.kind == "deterministic" else n

    def work(chunk, start, rows):
        u = streams.uniform_block(seed, stream, chunk, rows, words)
        z1 = ndtri(u[:, :n])
        z2 = ndtri(u[:, n : 2 * n])
        s = np.asarray(scaling.ppf(u[:, 2 * n : 3 * n]), dtype=float)
        x1 = s * z1
        x2 = s * (lam0 * z1 + root * z2)
        mx = np.stack([x1.max(axis=1), x2.max(axis=1)], axis=1)
        mn = np.stack([x1.min(axis=1), x2.min(axis=1)], axis=1)
        if miss.kind == "full":
            return mx, mn, mx.copy(), mn.copy()
        if miss.kind == "deterministic":
            o1, o2 = x1[:, :n_obs_det], x2[:, :n_obs_det]
            mxo = np.stack([o1.max(axis=1), o2.max(axis=1)], axis=1)
            mno = np.stack([o1.min(axis=1), o2.min(axis=1)], axis=1)
        else:
            obs = u[:, 3 * n :] < miss.eta
            any_obs = obs.any(axis=1)
            neg = np.where(obs, x1, -np.inf)
            mxo1 = neg.max(axis=1)
            mno1 = np.where(obs, x1, np.inf).min(axis=1)
            mxo2 = np.where(obs, x2, -np.inf).max(axis=1)
            mno2 = np.where(obs, x2, np.inf).min(axis=1)
            # rows with no observed vector degenerate to the convention
            # "observed max below every threshold"
            mxo1 = np.where(any_obs, mxo1, -np.inf)
            mxo2 = np.where(any_obs, mxo2, -np.inf)
            mno1 = np.where(any_obs, mno1, np.inf)
            mno2 = np.where(any_obs, mno2, np.inf)
            mxo = np.stack([mxo1, mxo2], axis=1)
            mno = np.stack([mno1, mno2], axis=1)
        return mxo, mno, mx, mn

    rows = streams.rows_per_chunk(words)
    parts = streams.map_chunks(work, reps, workers, rows=rows)
    max_obs = np.vstack([p[0] for p in parts])
    min_obs = np.vstack([p[1] for p in parts])
    max_full = np.vstack([p[2] for p in parts])
    min_full = np.vstack([p[3] for p in parts])
    return BivariateMissingResult(
        max_obs=norming.normalize(max_obs),
        min_obs=norming.normalize(-min_obs),
        max_full=norming.normalize(max_full),
        min_full=norming.normalize(-min_full),
        norming=norming,
        lambda0=lam0,
        eta=miss.eta,
    )


def mixture_cdf(lam: float, eta: float, x1: float, x2: float, x3: float, x4: float) -> float:
    """Limit of P(observed maxima <= (x1,x2), full maxima <= (x3,x4)).

    Constant-eta product mixture H^eta(x1,x2) H^(1-eta)(x3,x4); the grid is
    self-consistent only when x1 <= x3 and x2 <= x4 (observed extremes are
    dominated pathwise by the full ones).
    """
    if not (x1 <= x3 and x2 <= x4):
        raise ParamOutOfRangeError("mixture grid needs x1 <= x3 and x2 <= x4")
    return husler_reiss(x1, x2, lam) ** eta * husler_reiss(x3, x4, lam) ** (1.0 - eta)


# ---------------------------------------------------------------------------
# array-condition diagnostics


@dataclass(frozen=True)
class ArrayDiagnostics:
    """Evaluated mixing/norming conditions over an n-grid, with trend slopes."""

    n_grid: tuple
    tau: float
    rho_l: float
    rho_r: float
    m: int
    r_n: np.ndarray
    l_n: np.ndarray
    c_n: np.ndarray
    ratio_l_r: np.ndarray
    ratio_r_n: np.ndarray
    expr_separation: np.ndarray
    expr_local: np.ndarray
    slopes: dict

    def rows(self):
        for i, n in enumerate(self.n_grid):
            yield {
                "n": n,
                "r_n": int(self.r_n[i]),
                "l_n": int(self.l_n[i]),
                "c_n": float(self.c_n[i]),
                "l_over_r": float(self.ratio_l_r[i]),
                "r_over_n": float(self.ratio_r_n[i]),
                "expr_separation": float(self.expr_separation[i]),
                "expr_local": float(self.expr_local[i]),
            }


def _trend_slope(ns, values):
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0.0) or len(vals) < 2:
        return None
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(vals)
    xm, ym = x.mean(), y.mean()
    return float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))


def check_array_conditions(
    delta: Sequence[float],
    cutoff: int,
    tau: float,
    n_grid: Sequence[int],
    rho_l: float,
    rho_r: float,
    m: int = 2,
) -> ArrayDiagnostics:
    """Evaluate the blocking conditions of the scaled-array Gumbel limit.

    Schedules are r_n = floor(n^rho_r), l_n = floor(n^rho_l) with
    0 < rho_l < rho_r < 1.  Reports, per n: the two schedule ratios, the
    long-range separation sum weighted by exp(-c_n/(1+|rho|)) with
    c_n = 2 ln n - (2 tau + 1) ln ln n, and the local cluster sum from lag
    m to r_n.  Trend slopes over the grid should be negative; this is a
    diagnostic, never a proof.
    """
    if not 0.0 < rho_l < rho_r < 1.0:
        raise ScheduleInvalidError("need 0 < rho_l < rho_r < 1")
    if m < 1:
        raise ScheduleInvalidError("m must be >= 1")
    delta = np.asarray(delta, dtype=float)
    if cutoff > 0 and np.min(delta[:cutoff]) <= 0:
        raise InvalidDeltaError("delta_j must be positive up to the cutoff")

    n_grid = tuple(int(n) for n in n_grid)
    r_ns, l_ns, c_ns = [], [], []
    ratio_lr, ratio_rn, expr2, expr3 = [], [], [], []
    for n in n_grid:
        ln = _require_n(n)
        r_n = max(1, int(n**rho_r))
        l_n = max(1, int(n**rho_l))
        c_n = 2.0 * ln - (2.0 * tau + 1.0) * math.log(ln)

        def rho_at(j):
            if 1 <= j <= cutoff:
                return max(-1.0 + 1e-12, 1.0 - delta[j - 1] / ln)
            return 0.0

        # separation sum: lags beyond the cutoff have rho = 0 and drop out
        s2 = 0.0
        for j in range(l_n, min(cutoff, n) + 1):
            r = abs(rho_at(j))
            if r == 0.0:
                continue
            s2 += r * (1.0 + r) ** tau / math.sqrt(1.0 - r * r) * math.exp(-c_n / (1.0 + r))
        s2 *= n * n / r_n * c_n ** (-tau)

        # local sum: the rho = 0 block contributes identical terms
        s3 = 0.0
        zero_term = n**-1.0 * ln**tau
        for j in range(m, r_n + 1):
            r = rho_at(j)
            if r == 0.0:
                s3 += zero_term
            else:
                s3 += (
                    n ** (-(1.0 - r) / (1.0 + r))
                    * ln ** ((tau * (1.0 - r) - r) / (1.0 + r))
                    / math.sqrt(1.0 - r * r)
                )

        r_ns.append(r_n)
        l_ns.append(l_n)
        c_ns.append(c_n)
        ratio_lr.append(l_n / r_n)
        ratio_rn.append(r_n / n)
        expr2.append(s2)
        expr3.append(s3)

    slopes = {
        "l_over_r": _trend_slope(n_grid, ratio_lr),
        "r_over_n": _trend_slope(n_grid, ratio_rn),
        "expr_separation": _trend_slope(n_grid, expr2),
        "expr_local": _trend_slope(n_grid, expr3),
    }
    return ArrayDiagnostics(
        n_grid=n_grid, tau=tau, rho_l=rho_l, rho_r=rho_r, m=m,
        r_n=np.array(r_ns), l_n=np.array(l_ns), c_n=np.array(c_ns),
        ratio_l_r=np.array(ratio_lr), ratio_r_n=np.array(ratio_rn),
        expr_separation=np.array(expr2), expr_local=np.array(expr3),
        slopes=slopes,
    )
