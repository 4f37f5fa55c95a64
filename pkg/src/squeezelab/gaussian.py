"""Zero-mean single-mode Gaussian states described by two quadrature variances.

Internally everything is expressed relative to a vacuum variance of one
(``Convention.UNITY``). The quarter and half conventions used in textbooks
are conversions at the edges.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ValidationError

HEISENBERG_RTOL = 1e-12


class Convention(enum.Enum):
    """Value of the vacuum quadrature variance."""

    QUARTER = 0.25
    HALF = 0.5
    UNITY = 1.0

    @property
    def vacuum_variance(self) -> float:
        return self.value

    @classmethod
    def parse(cls, name: "str | Convention") -> "Convention":
        if isinstance(name, Convention):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValidationError(f"unknown variance convention {name!r}") from None


def convert_variance(v, src: Convention, dst: Convention):
    """Rescale a variance (or array of them) between conventions."""
    if src is dst:
        return v
    return v * (dst.value / src.value)


def db_to_linear(v_db: float) -> float:
    """``10**(v_db/10)``: variance relative to vacuum from a dB figure."""
    if not math.isfinite(v_db):
        raise ValidationError(f"dB value must be finite, got {v_db!r}")
    return 10.0 ** (v_db / 10.0)


def linear_to_db(v: float) -> float:
    if not v > 0:
        raise ValidationError(f"variance must be positive to express in dB, got {v!r}")
    return 10.0 * math.log10(v)


@dataclass(frozen=True)
class GaussianState:
    """Squeezed (v1) and anti-squeezed (v2) quadrature variances.

    Products below the uncertainty bound by a relative 1e-12 or less are
    treated as rounding and clamped onto the bound; anything further below
    raises :class:`ValidationError`.
    """

    v1: float
    v2: float
    convention: Convention = Convention.UNITY

    def __post_init__(self):
        v1, v2 = float(self.v1), float(self.v2)
        if not (math.isfinite(v1) and math.isfinite(v2)):
            raise ValidationError("variances must be finite")
        if v1 <= 0 or v2 <= 0:
            raise ValidationError(f"variances must be positive, got v1={v1}, v2={v2}")
        bound = self.convention.value ** 2
        prod = v1 * v2
        if prod < bound:
            if prod < bound * (1.0 - HEISENBERG_RTOL):
                raise ValidationError(
                    f"state violates the uncertainty bound: v1*v2={prod!r} < {bound!r}"
                )
            scale = math.sqrt(bound / prod)
            v1, v2 = v1 * scale, v2 * scale
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)

    @classmethod
    def from_db(cls, v1_db: float, v2_db: float) -> "GaussianState":
        """State from dB values relative to vacuum (UNITY convention)."""
        return cls(db_to_linear(v1_db), db_to_linear(v2_db), Convention.UNITY)

    @classmethod
    def vacuum(cls, convention: Convention = Convention.UNITY) -> "GaussianState":
        return cls(convention.value, convention.value, convention)

    def to(self, convention: Convention) -> "GaussianState":
        convention = Convention.parse(convention)
        if convention is self.convention:
            return self
        return GaussianState(
            convert_variance(self.v1, self.convention, convention),
            convert_variance(self.v2, self.convention, convention),
            convention,
        )

    def unity(self) -> tuple[float, float]:
        """Variances relative to vacuum."""
        s = self.to(Convention.UNITY)
        return s.v1, s.v2

    def db(self) -> tuple[float, float]:
        v1, v2 = self.unity()
        return linear_to_db(v1), linear_to_db(v2)

    @property
    def is_pure(self) -> bool:
        v1, v2 = self.unity()
        return abs(v1 * v2 - 1.0) <= 1e-12


@dataclass(frozen=True)
class LossChannel:
    """Vacuum admixture with combined efficiency ``eta_gamma``."""

    eta_gamma: float

    def __post_init__(self):
        eg = float(self.eta_gamma)
        if not (0.0 < eg <= 1.0):
            raise ValidationError(f"eta_gamma must lie in (0, 1], got {eg!r}")
        object.__setattr__(self, "eta_gamma", eg)

    @property
    def vacuum_fraction(self) -> float:
        return 1.0 - self.eta_gamma


def apply_loss(pure: GaussianState, loss: LossChannel) -> GaussianState:
    """Mix ``pure`` with vacuum: ``V = eg * V' + (1 - eg)`` per quadrature."""
    if pure.convention is not Convention.UNITY:
        raise ValidationError("apply_loss expects a UNITY-convention state")
    eg = loss.eta_gamma
    return GaussianState(eg * pure.v1 + (1.0 - eg), eg * pure.v2 + (1.0 - eg))


@dataclass(frozen=True)
class LossFit:
    loss: LossChannel
    pure_states: list = field(default_factory=list)
    # ln V1' + ln V2' for each input pair at the fitted efficiency
    residuals: tuple = ()


def _log_product_residual(pairs, vac):
    # r_i(vac) = ln(V1 - vac) + ln(V2 - vac) - 2 ln(1 - vac)
    return sum(
        (math.log(v1 - vac) + math.log(v2 - vac) - 2.0 * math.log(1.0 - vac)) ** 2
        for v1, v2 in pairs
    )


def _objective_gradient(pairs, vac):
    g = 0.0
    for v1, v2 in pairs:
        r = math.log(v1 - vac) + math.log(v2 - vac) - 2.0 * math.log(1.0 - vac)
        dr = -1.0 / (v1 - vac) - 1.0 / (v2 - vac) + 2.0 / (1.0 - vac)
        g += 2.0 * r * dr
    return g


def infer_loss(measured: list[GaussianState], grid_points: int = 4001) -> LossFit:
    """Fit one loss channel shared by several measured (lossy) states.

    Minimises the sum over pairs of ``(ln V1' + ln V2')**2`` where
    ``V' = (V - (1 - eg)) / eg`` are the variances before loss. The vacuum
    fraction is bracketed on a grid over ``[0, min V1)`` and polished with a
    root solve on the gradient.
    """
    if not measured:
        raise ValidationError("infer_loss needs at least one measured state")
    pairs = []
    for s in measured:
        if s.convention is not Convention.UNITY:
            raise ValidationError("infer_loss expects UNITY-convention states")
        if not (s.v1 < 1.0 < s.v2):
            raise ValidationError(
                f"pair ({s.v1:g}, {s.v2:g}) is not squeezed; loss is unidentifiable"
            )
        pairs.append((s.v1, s.v2))

    upper = min(v1 for v1, _ in pairs)
    # stay strictly inside the domain where V1 - vac > 0
    grid = np.linspace(0.0, upper, grid_points)[:-1]
    obj = np.array([_log_product_residual(pairs, x) for x in grid])
    k = int(np.argmin(obj))
    best = grid[k]
    if k == 0:
        if _objective_gradient(pairs, 0.0) < 0.0 and len(grid) > 1:
            best = brentq(lambda x: _objective_gradient(pairs, x), 0.0, grid[1], xtol=1e-16)
    else:
        lo = grid[k - 1]
        hi = grid[k + 1] if k + 1 < len(grid) else 0.5 * (grid[k] + upper)
        glo = _objective_gradient(pairs, lo)
        ghi = _objective_gradient(pairs, hi)
        if glo < 0.0 < ghi:
            best = brentq(lambda x: _objective_gradient(pairs, x), lo, hi, xtol=1e-16, rtol=1e-15)
        elif glo == 0.0:
            best = lo
    vac = float(best)
    eg = 1.0 - vac

    pure, residuals = [], []
    for v1, v2 in pairs:
        p1, p2 = (v1 - vac) / eg, (v2 - vac) / eg
        residuals.append(math.log(p1) + math.log(p2))
        scale = math.sqrt(p1 * p2)
        pure.append(GaussianState(p1 / scale, p2 / scale))
    return LossFit(LossChannel(eg), pure, tuple(residuals))


def purity(state: GaussianState) -> float:
    """tr(rho**2) of a Gaussian state: vacuum variance over sqrt(v1*v2)."""
    # clamped states can sit an ulp below the bound
    return min(state.convention.value / math.sqrt(state.v1 * state.v2), 1.0)


def mean_photon_number(state: GaussianState) -> float:
    v1, v2 = state.unity()
    return max((v1 + v2) / 4.0 - 0.5, 0.0)


# ------------------------------------------------------------------ Wigner


@dataclass(frozen=True)
class GridSpec:
    """Square grid ``[-x1_extent, x1_extent] x [-x2_extent, x2_extent]``."""

    x1_extent: float
    x2_extent: float
    points: int = 513

    def __post_init__(self):
        if not (self.x1_extent > 0 and self.x2_extent > 0):
            raise ValidationError("grid extents must be positive")
        if int(self.points) < 3:
            raise ValidationError("grid needs at least 3 points per axis")

    @classmethod
    def covering(cls, state: GaussianState, n_sigma: float = 8.0, points: int = 513,
                 convention: Convention = Convention.QUARTER) -> "GridSpec":
        s = state.to(convention)
        return cls(n_sigma * math.sqrt(s.v1), n_sigma * math.sqrt(s.v2), points)


@dataclass(frozen=True)
class WignerGrid:
    x1: np.ndarray
    x2: np.ndarray
    values: np.ndarray  # values[i, j] at (x1[i], x2[j])
    convention: Convention

    @property
    def cell_area(self) -> float:
        return float((self.x1[1] - self.x1[0]) * (self.x2[1] - self.x2[0]))

    def total(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        """Projections onto X1 and X2."""
        dx1 = self.x1[1] - self.x1[0]
        dx2 = self.x2[1] - self.x2[0]
        return self.values.sum(axis=1) * dx2, self.values.sum(axis=0) * dx1

    def marginal_variances(self) -> tuple[float, float]:
        p1, p2 = self.marginals()
        dx1 = self.x1[1] - self.x1[0]
        dx2 = self.x2[1] - self.x2[0]
        return float((self.x1**2 * p1).sum() * dx1), float((self.x2**2 * p2).sum() * dx2)


def wigner_eval(state: GaussianState, grid: GridSpec,
                convention: Convention = Convention.QUARTER) -> WignerGrid:
    """Normalised Gaussian Wigner function of ``state`` sampled on ``grid``.

    The quadrature axes are in units where the vacuum variance equals
    ``convention``; the default (1/4) gives a vacuum peak of ``2/pi``.
    """
    convention = Convention.parse(convention)
    s = state.to(convention)
    x1 = np.linspace(-grid.x1_extent, grid.x1_extent, int(grid.points))
    x2 = np.linspace(-grid.x2_extent, grid.x2_extent, int(grid.points))
    norm = 1.0 / (2.0 * math.pi * math.sqrt(s.v1 * s.v2))
    w = norm * np.exp(-0.5 * (x1[:, None] ** 2 / s.v1 + x2[None, :] ** 2 / s.v2))
    return WignerGrid(x1, x2, w, convention)
