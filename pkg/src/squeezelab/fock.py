"""Photon-number (Fock) basis description of lossy squeezed vacuum."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import kernels
from .errors import ConvergenceError, ValidationError
from .gaussian import Convention, GaussianState

DEFAULT_TRUNCATION = 170
TRACE_WARNING = 0.01

_LF = kernels.log_factorial_table(1024)


def _log_factorials(n: int) -> np.ndarray:
    global _LF
    if n >= _LF.size:
        _LF = kernels.log_factorial_table(2 * n)
    return _LF


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    source_state: GaussianState
    normalized: bool = False
    truncation_warning: bool = False
    # oracle only: dimension of the operator workspace
    workspace: int | None = None

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def truncation(self) -> int:
        return self.dim - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def trace_deficit(self) -> float:
        return 1.0 - self.trace

    def truncate(self, n: int) -> "DensityMatrix":
        """Top-left ``(n+1) x (n+1)`` block."""
        if not 0 <= n <= self.truncation:
            raise ValidationError(f"cannot truncate N={self.truncation} matrix to {n}")
        return DensityMatrix(self.entries[: n + 1, : n + 1].copy(), self.source_state,
                             self.normalized, False, self.workspace)

    def purity(self) -> float:
        return float(np.sum(self.entries**2))


@dataclass(frozen=True)
class PhotonDistribution:
    probabilities: np.ndarray
    source_state: GaussianState | None = None

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValidationError("photon distribution must be a non-empty 1-d array")
        if np.any(p < 0):
            raise ValidationError("photon probabilities must be non-negative")
        if p.sum() > 1.0 + 1e-9:
            raise ValidationError(f"photon probabilities sum to {p.sum()!r} > 1")
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return self.probabilities.size

    def mean(self) -> float:
        return float(np.dot(np.arange(self.probabilities.size), self.probabilities))


def _canonical_half(state: GaussianState) -> tuple[float, float]:
    s = state.to(Convention.HALF)
    return min(s.v1, s.v2), max(s.v1, s.v2)


def density_matrix(state: GaussianState, truncation: int = DEFAULT_TRUNCATION,
                   normalize: bool = False) -> DensityMatrix:
    """Density matrix of ``state`` in the photon-number basis up to ``truncation``.

    The squeezed quadrature is taken as the X axis. With ``normalize=True`` the
    truncated matrix is divided by its trace.
    """
    if int(truncation) < 0:
        raise ValidationError("truncation must be >= 0")
    nmax = int(truncation)
    vx, vp = _canonical_half(state)
    t, u, log_pref = kernels.fock_coefficients(vx, vp)
    rho = kernels.density_matrix_kernel(t, u, log_pref, nmax, _log_factorials(nmax))
    deficit = 1.0 - float(np.trace(rho))
    warn = deficit > TRACE_WARNING
    if warn:
        warnings.warn(f"truncation N={nmax} leaves trace deficit {deficit:.3g}", RuntimeWarning,
                      stacklevel=2)
    if normalize:
        rho = rho / np.trace(rho)
    rho.setflags(write=False)
    return DensityMatrix(rho, state, normalize, warn)


def oracle_density_matrix(state: GaussianState, truncation: int = 10,
                          workspace: int | None = None, max_workspace: int = 2048,
                          tol: float = 1e-12) -> DensityMatrix:
    """Brute-force density matrix: squeezed thermal state in a larger Fock space.

    The lossy state is rewritten as ``S(r) rho_th(nbar) S(r)^dagger`` with
    ``exp(2r) = sqrt(V2/V1)`` and ``2 nbar + 1 = sqrt(V1 V2)`` (vacuum = 1),
    the squeeze operator is a dense matrix exponential, and the result is
    cut down to ``truncation``. Without an explicit ``workspace`` the space
    starts at ``4 (N + 1)`` and doubles until the kept block changes by less
    than ``tol``.
    """
    nmax = int(truncation)
    if nmax < 0:
        raise ValidationError("truncation must be >= 0")
    v1, v2 = sorted(state.unity())
    r = 0.25 * math.log(v2 / v1)
    nbar = 0.5 * (math.sqrt(v1 * v2) - 1.0)
    if nbar < 1e-14:
        nbar = 0.0

    def build(dim):
        occ = np.arange(dim)
        if nbar > 0:
            q = nbar / (1.0 + nbar)
            if q**dim > 1e-10:
                raise ConvergenceError(
                    f"workspace {dim} leaves thermal weight {q**dim:.3g} beyond the cut"
                )
            thermal = q**occ / (1.0 + nbar)
        else:
            thermal = (occ == 0).astype(float)
        lower = np.diag(np.sqrt(np.arange(1.0, dim)), 1)  # annihilation
        raise_ = lower.T
        sq = expm(0.5 * r * (lower @ lower - raise_ @ raise_))
        full = (sq * thermal) @ sq.T
        return full[: nmax + 1, : nmax + 1]

    if workspace is not None:
        if workspace < 4 * (nmax + 1):
            raise ValidationError("oracle workspace must be at least 4 (N + 1)")
        dim = int(workspace)
        rho = build(dim)
    else:
        dim = 4 * (nmax + 1)
        if nbar > 0:
            dim = max(dim, math.ceil(math.log(1e-10) / math.log(nbar / (1.0 + nbar))) + 1)
        rho = build(dim)
        while True:
            nxt = 2 * dim
            if nxt > max_workspace:
                raise ConvergenceError(f"oracle did not converge within workspace {max_workspace}")
            rho2 = build(nxt)
            change = np.abs(rho2 - rho).max()
            dim, rho = nxt, rho2
            if change < tol:
                break
    rho = 0.5 * (rho + rho.T)
    rho.setflags(write=False)
    return DensityMatrix(rho, state, False, False, dim)


def photon_distribution(dm: DensityMatrix) -> PhotonDistribution:
    """Diagonal of ``dm`` as P(n)."""
    p = np.clip(np.diag(dm.entries).copy(), 0.0, None)
    return PhotonDistribution(p, dm.source_state)


def photon_distributions(v1, v2, truncations) -> np.ndarray:
    """P(n) for many states at once from vacuum-normalised variance arrays.

    Row ``i`` is zero beyond ``truncations[i]``. Same sums as
    :func:`density_matrix` restricted to the diagonal.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    ntr = np.broadcast_to(np.asarray(truncations, dtype=np.int64), v1.shape).copy()
    if v1.size == 0:
        return np.zeros((0, 1))
    tx = 0.5 * np.minimum(v1, v2) + 0.5
    tp = 0.5 * np.maximum(v1, v2) + 0.5
    t = 1.0 / (4.0 * tx) - 1.0 / (4.0 * tp)
    u = 1.0 - 1.0 / (2.0 * tx) - 1.0 / (2.0 * tp)
    u = np.where(np.abs(u) < kernels.PURE_U_TOL, 0.0, u)
    log_pref = -0.5 * np.log(tx * tp)
    lf = _log_factorials(int(ntr.max()))
    out = kernels.diagonal_batch_kernel(t, u, log_pref, ntr, lf)
    return np.clip(out, 0.0, None)


def oscillation_contrast(pd: PhotonDistribution, max_n: int) -> list[tuple[int, float]]:
    """Even/odd contrast at even photon numbers ``2..max_n``.

    ``(P(n) - nb) / (P(n) + nb)`` with ``nb`` the mean of the two odd
    neighbours. Points where all three probabilities vanish are left out.
    """
    p = pd.probabilities
    if max_n + 1 >= p.size:
        raise ValidationError(f"max_n={max_n} needs P(n) up to {max_n + 1}, have {p.size - 1}")
    out = []
    for n in range(2, max_n + 1, 2):
        nb = 0.5 * (p[n - 1] + p[n + 1])
        den = p[n] + nb
        if den == 0.0:
            continue
        out.append((n, float((p[n] - nb) / den)))
    return out


def conditional_mean_given_click(pd: PhotonDistribution) -> float:
    """Mean photon number once the vacuum outcome is discarded."""
    p = pd.probabilities
    n = np.arange(p.size)
    click = p[1:].sum()
    if not click > 0:
        raise ValidationError("distribution has no weight beyond n = 0")
    return float(np.dot(n[1:], p[1:]) / click)
