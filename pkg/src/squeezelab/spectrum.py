"""Below-threshold OPO squeezing spectrum, its bandwidth, fitting and photon rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.special import expit

from . import fock
from ._util import pairwise_sum
from .errors import ConvergenceError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0
PLANCK = 6.626_070_15e-34
WAVELENGTH = 1064e-9
PUMP_RATIO_MAX = 0.999


def photon_energy(wavelength: float = WAVELENGTH) -> float:
    return PLANCK * SPEED_OF_LIGHT / wavelength


@dataclass(frozen=True)
class SpectrumModel:
    """Parameters of the OPO quadrature spectrum.

    ``kappa`` is the cavity decay rate in rad/s. When the cavity is described
    by its output-coupler transmittance, round-trip loss and round-trip length
    use :meth:`from_cavity`, which stores them alongside.
    """

    pump_ratio: float
    eta_gamma: float
    kappa: float
    transmittance: float | None = None
    round_trip_loss: float | None = None
    round_trip_length: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.pump_ratio < 1.0):
            raise ValidationError(f"pump_ratio must be in [0, 1), got {self.pump_ratio!r}")
        if not (0.0 < self.eta_gamma <= 1.0):
            raise ValidationError(f"eta_gamma must be in (0, 1], got {self.eta_gamma!r}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be positive, got {self.kappa!r}")
        cav = (self.transmittance, self.round_trip_loss, self.round_trip_length)
        if all(c is not None for c in cav):
            expected = cavity_decay_rate(*cav)
            if abs(expected - self.kappa) > 1e-9 * expected:
                raise ValidationError("kappa disagrees with (T + L) c / l")

    @classmethod
    def from_cavity(cls, pump_ratio, eta_gamma, transmittance, round_trip_loss,
                    round_trip_length) -> "SpectrumModel":
        kappa = cavity_decay_rate(transmittance, round_trip_loss, round_trip_length)
        return cls(pump_ratio, eta_gamma, kappa, transmittance, round_trip_loss,
                   round_trip_length)

    @property
    def escape_efficiency(self) -> float | None:
        if self.transmittance is None or self.round_trip_loss is None:
            return None
        return self.transmittance / (self.transmittance + self.round_trip_loss)

    def with_params(self, pump_ratio, eta_gamma, kappa) -> "SpectrumModel":
        return SpectrumModel(float(pump_ratio), float(eta_gamma), float(kappa))


def cavity_decay_rate(transmittance: float, round_trip_loss: float,
                      round_trip_length: float) -> float:
    if transmittance < 0 or round_trip_loss < 0 or transmittance + round_trip_loss <= 0:
        raise ValidationError("transmittance and loss must be non-negative, not both zero")
    if not round_trip_length > 0:
        raise ValidationError("round-trip length must be positive")
    return (transmittance + round_trip_loss) * SPEED_OF_LIGHT / round_trip_length


@dataclass(frozen=True)
class SpectrumData:
    frequencies: np.ndarray
    v1_obs: np.ndarray
    v2_obs: np.ndarray
    resolution_bandwidth: float | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v1 = np.asarray(self.v1_obs, dtype=float)
        v2 = np.asarray(self.v2_obs, dtype=float)
        if f.ndim != 1 or not (f.shape == v1.shape == v2.shape):
            raise ValidationError("frequency and variance columns must have equal length")
        if f.size and (f[0] <= 0 or np.any(np.diff(f) <= 0)):
            raise ValidationError("frequencies must be positive and strictly increasing")
        if np.any(v1 <= 0) or np.any(v2 <= 0):
            raise ValidationError("observed variances must be positive")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "v1_obs", v1)
        object.__setattr__(self, "v2_obs", v2)

    @classmethod
    def from_db(cls, f_hz, v1_db, v2_db, resolution_bandwidth=None) -> "SpectrumData":
        return cls(f_hz, 10.0 ** (np.asarray(v1_db, float) / 10.0),
                   10.0 ** (np.asarray(v2_db, float) / 10.0), resolution_bandwidth)


def _variances(p, eg, kappa, f):
    # numerators written as sums of non-negative terms: 1 - gain/den cancels
    # badly near threshold, where v1 is tiny
    s = math.sqrt(p)
    k2 = 4.0 * (2.0 * math.pi * f / kappa) ** 2
    lo = (1.0 - s) ** 2 + k2
    hi = (1.0 + s) ** 2 + k2
    v1 = (lo + 4.0 * (1.0 - eg) * s) / hi
    v2 = (lo + 4.0 * eg * s) / lo
    return v1, v2


def model_variances(model: SpectrumModel, f):
    """Squeezed and anti-squeezed variance (vacuum = 1) at Fourier frequency ``f`` [Hz]."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValidationError("Fourier frequency must be >= 0")
    v1, v2 = _variances(model.pump_ratio, model.eta_gamma, model.kappa, f)
    if v1.ndim == 0:
        return float(v1), float(v2)
    return v1, v2


def half_point_variance(model: SpectrumModel) -> float:
    v0, _ = model_variances(model, 0.0)
    return v0 + 0.5 * (1.0 - v0)


def squeezing_bandwidth(model: SpectrumModel) -> float:
    """Fourier frequency where the squeezed variance is halfway back to vacuum.

    Setting ``1/((1+s)^2 + 4K^2) = 1/(2 (1+s)^2)`` gives ``K = (1+s)/2``,
    i.e. ``f = kappa (1 + s) / (4 pi)`` whatever the efficiency. A bracketed
    root search takes over if the closed form does not check out.
    """
    if model.pump_ratio <= 0:
        raise ValidationError("no squeezing at f=0: bandwidth undefined")
    s = math.sqrt(model.pump_ratio)
    target = half_point_variance(model)
    f_bw = model.kappa * (1.0 + s) / (4.0 * math.pi)
    if abs(model_variances(model, f_bw)[0] - target) <= 1e-12:
        return f_bw

    def g(f):
        return model_variances(model, f)[0] - target

    hi = model.kappa
    while g(hi) < 0:
        hi *= 2.0
    return brentq(g, 0.0, hi, xtol=1e-9, rtol=1e-15)


# ------------------------------------------------------------------ fitting

_TRACES = {"v1": (True, False), "v2": (False, True), "joint": (True, True)}


def _to_internal(p, eg, kappa):
    p_ = min(max(p / PUMP_RATIO_MAX, 1e-12), 1 - 1e-12)
    eg_ = min(max(eg, 1e-12), 1 - 1e-12)
    return np.array([math.log(p_ / (1 - p_)), math.log(eg_ / (1 - eg_)), math.log(kappa)])


def _from_internal(z):
    p = PUMP_RATIO_MAX * float(expit(z[0]))
    eg = float(expit(z[1]))
    return p, eg, math.exp(min(z[2], 700.0))


def _db_residuals(params, data, use1, use2):
    v1, v2 = _variances(*params, data.frequencies)
    parts = []
    if use1:
        parts.append(10.0 * np.log10(v1 / data.v1_obs))
    if use2:
        parts.append(10.0 * np.log10(v2 / data.v2_obs))
    return np.concatenate(parts)


@dataclass(frozen=True)
class FitResult:
    model: SpectrumModel
    residual: float  # sum of squared dB residuals
    initial_residual: float
    improved: bool
    converged: bool
    condition_number: float
    ill_conditioned: bool
    message: str = ""
    parameter_errors: dict = field(default_factory=dict)


def residual_sum(model: SpectrumModel, data: SpectrumData, which: str = "joint") -> float:
    use1, use2 = _TRACES[which]
    r = _db_residuals((model.pump_ratio, model.eta_gamma, model.kappa), data, use1, use2)
    return float(np.dot(r, r))


def _log_param_jacobian(params, data, use1, use2, rel_step=1e-6):
    """d(residual)/d(ln param) by central differences."""
    base = np.array(params, dtype=float)
    cols = []
    for j in range(3):
        h = rel_step
        up = base.copy()
        dn = base.copy()
        up[j] *= math.exp(h)
        dn[j] *= math.exp(-h)
        if j < 2:
            up[j] = min(up[j], PUMP_RATIO_MAX if j == 0 else 1.0)
        cols.append((_db_residuals(up, data, use1, use2) - _db_residuals(dn, data, use1, use2))
                    / math.log(up[j] / dn[j]))
    return np.column_stack(cols)


def fit_spectrum(data: SpectrumData, init: SpectrumModel, which: str = "joint",
                 max_nfev: int = 2000, cond_limit: float = 1e8) -> FitResult:
    """Least-squares fit of ``(pump_ratio, eta_gamma, kappa)`` in dB space.

    Bounds are enforced by fitting logit(pump_ratio / 0.999), logit(eta_gamma)
    and log(kappa). The conditioning of the Gauss-Newton Hessian in
    log-parameters is reported; single-trace fits are generically degenerate.
    """
    if which not in _TRACES:
        raise ValidationError(f"which must be one of {sorted(_TRACES)}, got {which!r}")
    use1, use2 = _TRACES[which]
    if data.frequencies.size < 3:
        raise ValidationError("need at least 3 data points per fitted trace")
    init_params = (init.pump_ratio, init.eta_gamma, init.kappa)
    r0 = _db_residuals(init_params, data, use1, use2)
    res0 = float(np.dot(r0, r0))

    def fun(z):
        return _db_residuals(_from_internal(z), data, use1, use2)

    sol = least_squares(fun, _to_internal(*init_params), method="trf", x_scale="jac",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    params = _from_internal(sol.x)
    res = float(np.dot(sol.fun, sol.fun))
    improved = res < res0
    if not improved:
        params, res = init_params, res0

    jac = _log_param_jacobian(params, data, use1, use2)
    hess = jac.T @ jac
    eig = np.linalg.eigvalsh(hess)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    ill = not (cond < cond_limit)
    errors = {}
    if not ill:
        npts = sol.fun.size
        dof = max(npts - 3, 1)
        cov = np.linalg.inv(hess) * (res / dof)
        for name, value, var in zip(("pump_ratio", "eta_gamma", "kappa"), params, np.diag(cov)):
            errors[name] = abs(value) * math.sqrt(max(var, 0.0))

    msg = sol.message
    if ill:
        msg += f"; ill-conditioned (cond={cond:.3g}): parameters partially degenerate"
    if not improved and res0 > 0:
        msg += "; no improvement over initial parameters"
    model = init.with_params(*params) if improved else init
    return FitResult(model, res, res0, improved, bool(sol.success), cond, ill, msg, errors)


def synthesize_spectrum(model: SpectrumModel, frequencies, noise_db: float = 0.0,
                        seed: int | None = None) -> SpectrumData:
    """Model spectrum with optional Gaussian noise added in dB."""
    f = np.asarray(frequencies, dtype=float)
    v1, v2 = model_variances(model, f)
    v1_db, v2_db = 10.0 * np.log10(v1), 10.0 * np.log10(v2)
    if noise_db > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        v1_db = v1_db + rng.normal(0.0, noise_db, f.size)
        v2_db = v2_db + rng.normal(0.0, noise_db, f.size)
    return SpectrumData.from_db(f, v1_db, v2_db)


# --------------------------------------------------------------- photon rate


@dataclass(frozen=True)
class PhotonRate:
    rate: float  # photons per second
    power: float  # watts
    weighted_distribution: fock.PhotonDistribution
    conditional_mean: float
    bins: int
    max_trace_deficit: float


def spectral_photon_rate(model: SpectrumModel, half_fsr: float = 5.5e9,
                         bin_width: float = 100e3, fock_truncation: int = 170,
                         low_truncation: int = 50, low_mean_threshold: float = 5.0,
                         wavelength: float = WAVELENGTH, chunk: int = 8192) -> PhotonRate:
    """Down-converted photon rate of one cavity mode, integrated over frequency bins.

    Bin centres sit at ``(i + 1/2) * bin_width``. Each bin's photon-number
    distribution uses ``low_truncation`` when its mean photon number is below
    ``low_mean_threshold`` and ``fock_truncation`` otherwise.
    """
    if not (half_fsr > 0 and bin_width > 0):
        raise ValidationError("half_fsr and bin_width must be positive")
    ratio = half_fsr / bin_width
    nbins = int(round(ratio))
    if nbins < 1 or abs(ratio - nbins) > 1e-9 * max(ratio, 1.0):
        raise ValidationError("half_fsr must be an integer multiple of bin_width")

    f = (np.arange(nbins) + 0.5) * bin_width
    v1, v2 = model_variances(model, f)
    nmean = (v1 + v2) / 4.0 - 0.5
    ntr = np.where(nmean < low_mean_threshold, low_truncation, fock_truncation).astype(np.int64)
    width = int(ntr.max()) + 1
    n = np.arange(width)

    dist_parts, count_parts = [], []
    max_deficit = 0.0
    for start in range(0, nbins, chunk):
        sl = slice(start, min(start + chunk, nbins))
        p = fock.photon_distributions(v1[sl], v2[sl], ntr[sl])
        if p.shape[1] < width:
            p = np.pad(p, ((0, 0), (0, width - p.shape[1])))
        deficit = 1.0 - p.sum(axis=1)
        worst = int(np.argmax(deficit))
        if deficit[worst] > fock.TRACE_WARNING:
            i = start + worst
            raise ConvergenceError(
                f"bin {i} (f={f[i]:.6g} Hz, N={ntr[i]}) has trace deficit {deficit[worst]:.3g}"
            )
        max_deficit = max(max_deficit, float(deficit.max()))
        dist_parts.append(p)
        count_parts.append(p @ n)
    p_all = np.concatenate(dist_parts)
    counts = np.concatenate(count_parts)

    weighted = pairwise_sum(p_all) / nbins
    rate = float(pairwise_sum(counts)) * bin_width
    power = rate * photon_energy(wavelength)
    pd = fock.PhotonDistribution(np.clip(weighted, 0.0, None))
    cond = fock.conditional_mean_given_click(pd) if pd.probabilities[1:].sum() > 0 else math.nan
    return PhotonRate(rate, power, pd, cond, nbins, max_deficit)


__all__ = [
    "SpectrumModel", "SpectrumData", "FitResult", "PhotonRate",
    "model_variances", "half_point_variance", "squeezing_bandwidth", "fit_spectrum",
    "residual_sum", "synthesize_spectrum", "spectral_photon_rate", "cavity_decay_rate",
    "photon_energy",
]
