"""Correlation models and reproducible sampling of unit-variance Gaussians.

A :class:`CorrelationModel` owns a validated correlation structure and its
(lazily computed) lower-triangular factor.  Stationary and Hüsler–Reiss
array models keep only the first Toeplitz row; when the kernel has finite
support the factorization and sampling run in banded form, which is what
makes row lengths of 10^4..10^5 affordable in the limit simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cholesky_banded, toeplitz

from . import streams
from .errors import (
    AsymmetryTooLargeError,
    InvalidDeltaError,
    NotPSDError,
    NotSquareError,
    NotUnitDiagonalError,
)

#: dense matrices are materialized only up to this dimension
DENSE_LIMIT = 4096

#: accept the factorization if the smallest eigenvalue is above this
PSD_TOL = -1e-10

#: lower clamp for Hüsler–Reiss array correlations
RHO_FLOOR = -1.0 + 1e-12


@dataclass
class CorrelationModel:
    """Validated correlation matrix, possibly in Toeplitz/banded form.

    ``kind`` is one of ``explicit``, ``stationary`` or ``hr-array``.  For the
    Toeplitz kinds ``first_row`` holds the defining kernel values and
    ``band`` the index of the last nonzero lag (or ``None`` when the kernel
    has full support).
    """

    dim: int
    kind: str
    entries: np.ndarray | None = None
    first_row: np.ndarray | None = None
    band: int | None = None
    clamped_lags: tuple[int, ...] = ()
    _factor: np.ndarray | None = field(default=None, repr=False)
    _factor_banded: np.ndarray | None = field(default=None, repr=False)

    def entry(self, i: int, j: int) -> float:
        if self.entries is not None:
            return float(self.entries[i, j])
        return float(self.first_row[abs(i - j)]) if abs(i - j) < self.dim else 0.0

    @property
    def factor(self) -> np.ndarray:
        """Dense lower-triangular L with ``L @ L.T == entries``."""
        if self._factor is None:
            if self.entries is None:
                raise NotPSDError(
                    f"dense factor unavailable for dim {self.dim} > {DENSE_LIMIT}; "
                    "use the banded sampling path"
                )
            self._factor = _dense_factor(self.entries)
        return self._factor

    @property
    def factor_banded(self) -> np.ndarray:
        """Lower-banded factor (scipy ``cholesky_banded`` layout)."""
        if self._factor_banded is None:
            if self.band is None or self.first_row is None:
                raise NotPSDError("banded factor requires a finite-support kernel")
            self._factor_banded = _banded_factor(self.first_row, self.band, self.dim)
        return self._factor_banded

    @property
    def is_banded(self) -> bool:
        return self.first_row is not None and self.band is not None


@dataclass(frozen=True)
class GaussianSample:
    """Matrix of draws (reps x dim) plus the keys that produced it."""

    draws: np.ndarray
    seed: int
    stream: int


def _dense_factor(entries: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(entries)
    except np.linalg.LinAlgError:
        pass
    eigmin = float(np.linalg.eigvalsh(entries)[0])
    if eigmin < PSD_TOL:
        raise NotPSDError(f"smallest pivot {eigmin:.3e} < {PSD_TOL:.0e}")
    shift = -eigmin + 1e-14
    return np.linalg.cholesky(entries + shift * np.eye(entries.shape[0]))


def _check_psd(entries: np.ndarray) -> None:
    eigmin = float(np.linalg.eigvalsh(entries)[0])
    if eigmin < PSD_TOL:
        raise NotPSDError(f"smallest pivot {eigmin:.3e} < {PSD_TOL:.0e}")


def _banded_storage(first_row: np.ndarray, band: int, n: int) -> np.ndarray:
    ab = np.zeros((band + 1, n))
    for d in range(band + 1):
        ab[d, : n - d] = first_row[d] if d < len(first_row) else 0.0
    return ab


def _banded_factor(first_row: np.ndarray, band: int, n: int) -> np.ndarray:
    ab = _banded_storage(first_row, band, n)
    try:
        return cholesky_banded(ab, lower=True)
    except np.linalg.LinAlgError:
        pass
    ab[0, :] += 1e-10
    try:
        return cholesky_banded(ab, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPSDError(f"banded Toeplitz kernel is not PSD (n={n})") from exc


def validate_correlation(raw) -> CorrelationModel:
    """Validate an explicit square correlation matrix.

    Symmetrizes by averaging when the asymmetry is at most 1e-12; computes
    the Cholesky factor eagerly so construction fails fast on non-PSD input.
    """
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquareError(f"expected square matrix, got shape {a.shape}")
    n = a.shape[0]
    asym = float(np.max(np.abs(a - a.T))) if n > 1 else 0.0
    if asym > 1e-12:
        raise AsymmetryTooLargeError(f"max asymmetry {asym:.3e} > 1e-12")
    a = 0.5 * (a + a.T)
    if np.max(np.abs(np.diag(a) - 1.0)) > 1e-12:
        raise NotUnitDiagonalError("diagonal entries must equal 1")
    np.fill_diagonal(a, 1.0)
    model = CorrelationModel(dim=n, kind="explicit", entries=a)
    model._factor = _dense_factor(a)
    return model


def identity_correlation(dim: int) -> CorrelationModel:
    return validate_correlation(np.eye(dim))


def stationary_correlation(kernel: Callable[[int], float], n: int) -> CorrelationModel:
    """Toeplitz model from a stationary kernel ``j -> rho_j``."""
    if abs(kernel(0) - 1.0) > 1e-12:
        raise NotUnitDiagonalError("kernel(0) must equal 1")
    first_row = np.array([float(kernel(j)) for j in range(n)])
    if np.max(np.abs(first_row)) > 1.0 + 1e-12:
        raise NotPSDError("|kernel(j)| > 1 cannot be a correlation")
    return _toeplitz_model(first_row, n, kind="stationary")


def hr_array_correlation(delta: Sequence[float], n: int, cutoff: int) -> CorrelationModel:
    """Stationary row model with lag-j correlation ``1 - delta_j / ln n``.

    Lags beyond ``cutoff`` are uncorrelated; values are clamped below at
    -1 + 1e-12 and the clamped lags are recorded on the model.
    """
    if n < 2:
        raise InvalidDeltaError(f"need n >= 2, got {n}")
    delta = np.asarray(delta, dtype=float)
    if cutoff > len(delta):
        raise InvalidDeltaError(f"cutoff {cutoff} exceeds provided delta length {len(delta)}")
    if cutoff > 0 and np.min(delta[:cutoff]) <= 0:
        raise InvalidDeltaError("delta_j must be positive for 1 <= j <= cutoff")
    log_n = math.log(n)
    first_row = np.zeros(n)
    first_row[0] = 1.0
    clamped = []
    for j in range(1, min(cutoff, n - 1) + 1):
        rho = 1.0 - delta[j - 1] / log_n
        if rho < RHO_FLOOR:
            rho = RHO_FLOOR
            clamped.append(j)
        first_row[j] = rho
    model = _toeplitz_model(first_row, n, kind="hr-array", band=min(cutoff, n - 1))
    model.clamped_lags = tuple(clamped)
    return model


def _toeplitz_model(first_row: np.ndarray, n: int, kind: str, band: int | None = None) -> CorrelationModel:
    if band is None:
        nz = np.nonzero(np.abs(first_row[1:]) > 0)[0]
        band = int(nz[-1]) + 1 if len(nz) else 0
    model = CorrelationModel(dim=n, kind=kind, first_row=first_row, band=band)
    if band < n - 1:
        # the banded factorization is the PSD check: O(n band^2)
        model._factor_banded = _banded_factor(first_row, band, n)
        if n <= DENSE_LIMIT:
            model.entries = toeplitz(first_row)
    elif n <= DENSE_LIMIT:
        model.entries = toeplitz(first_row)
        _check_psd(model.entries)
    else:
        raise NotPSDError(
            f"full-support kernel needs dim <= {DENSE_LIMIT} for dense factorization"
        )
    return model


def banded_product(factor_banded: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rows of ``z`` times the transpose of a lower-banded factor."""
    bandp1, n = factor_banded.shape
    x = np.zeros_like(z)
    for d in range(bandp1):
        x[:, d:n] += factor_banded[d, : n - d] * z[:, : n - d]
    return x


def correlate(model: CorrelationModel, z: np.ndarray) -> np.ndarray:
    """Apply the model's factor to iid standard normal rows."""
    if model._factor_banded is not None:
        return banded_product(model._factor_banded, z)
    return z @ model.factor.T


def sample_gaussian(
    model: CorrelationModel,
    reps: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> GaussianSample:
    """Draw ``reps`` rows of a centered Gaussian vector with the model's correlation.

    Output is a pure function of ``(model, reps, seed, stream)``; chunked
    counter-based streams make it invariant to ``workers``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    dim = model.dim

    def work(chunk: int, start: int, rows: int) -> np.ndarray:
        z = streams.normal_block(seed, stream, chunk, rows, dim)
        return correlate(model, z)

    parts = streams.map_chunks(work, reps, workers, rows=streams.rows_per_chunk(dim))
    return GaussianSample(draws=np.vstack(parts), seed=seed, stream=stream)
