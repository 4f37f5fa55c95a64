"""Hot loops for the Fock-basis density matrix of a zero-mean Gaussian state.

Every entry is an alternating sum over photon-pair index ``a``::

    rho[m, n] = sqrt(m! n! / (Vx Vp)) * sum_a (-T)**(d + 2a) U**(n - 2a)
                                         / (a! (n - 2a)! (a + d)!)

with ``m >= n``, ``d = (m - n) / 2`` and ``Vx, Vp`` the half-vacuum variances
shifted by 1/2. Magnitudes are formed in log space from a log-factorial table;
signs are tracked separately and each sign group is summed in ascending
magnitude before the final subtraction.

Two implementations share one signature: ``*_numba`` (``@njit``) and
``*_numpy`` (vectorised). The public names pick one according to
:mod:`squeezelab._accel`.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "fock_coefficients",
    "log_factorial_table",
    "density_matrix_kernel",
    "diagonal_batch_kernel",
    "density_matrix_numpy",
    "density_matrix_numba",
    "diagonal_batch_numpy",
    "diagonal_batch_numba",
]


PURE_U_TOL = 1e-14


def fock_coefficients(vx_half: float, vp_half: float) -> tuple[float, float, float]:
    """Return ``(T, U, log_prefactor)`` for half-vacuum variances ``vx <= vp``."""
    tx = vx_half + 0.5
    tp = vp_half + 0.5
    t = 1.0 / (4.0 * tx) - 1.0 / (4.0 * tp)
    u = 1.0 - 1.0 / (2.0 * tx) - 1.0 / (2.0 * tp)
    # U >= 0 for any physical state and vanishes exactly for pure ones; snap residue
    if abs(u) < PURE_U_TOL:
        u = 0.0
    return t, u, -0.5 * math.log(tx * tp)


def log_factorial_table(nmax: int) -> np.ndarray:
    """``table[k] = ln k!`` for ``k = 0..nmax``, from :func:`math.lgamma`."""
    return np.array([math.lgamma(k + 1.0) for k in range(nmax + 1)])


def _log_abs(x):
    return math.log(abs(x)) if x != 0.0 else -math.inf


# ---------------------------------------------------------------- numba path


@njit
def _entry_numba(m, n, log_t, sign_mt, log_u, sign_u, log_pref, lf):
    # m >= n, m - n even
    d = (m - n) // 2
    na = n // 2 + 1
    logs = np.empty(na)
    signs = np.empty(na)
    for a in range(na):
        et = d + 2 * a
        eu = n - 2 * a
        lt = 0.0 if et == 0 else et * log_t
        lu = 0.0 if eu == 0 else eu * log_u
        logs[a] = lt + lu - lf[a] - lf[n - 2 * a] - lf[a + d]
        s = 1.0
        if et % 2 == 1:
            s *= sign_mt
        if eu % 2 == 1:
            s *= sign_u
        signs[a] = s
    shift = 0.5 * (lf[m] + lf[n]) + log_pref
    pos = 0.0
    neg = 0.0
    order = np.argsort(logs)
    for k in range(na):
        i = order[k]
        if logs[i] == -np.inf:
            continue
        v = math.exp(logs[i] + shift)
        if signs[i] > 0:
            pos += v
        else:
            neg += v
    return pos - neg


@njit
def density_matrix_numba(t, u, log_pref, nmax, lf):
    rho = np.zeros((nmax + 1, nmax + 1))
    log_t = math.log(abs(t)) if t != 0.0 else -np.inf
    log_u = math.log(abs(u)) if u != 0.0 else -np.inf
    sign_mt = -1.0 if t > 0.0 else 1.0
    sign_u = 1.0 if u >= 0.0 else -1.0
    for m in range(nmax + 1):
        for n in range(m % 2, m + 1, 2):
            v = _entry_numba(m, n, log_t, sign_mt, log_u, sign_u, log_pref, lf)
            rho[m, n] = v
            rho[n, m] = v
    return rho


@njit
def _diag_one_numba(t, u, log_pref, ntrunc, lf, out):
    log_t = math.log(abs(t)) if t != 0.0 else -np.inf
    log_u = math.log(abs(u)) if u != 0.0 else -np.inf
    sign_mt = -1.0 if t > 0.0 else 1.0
    sign_u = 1.0 if u >= 0.0 else -1.0
    for n in range(ntrunc + 1):
        out[n] = _entry_numba(n, n, log_t, sign_mt, log_u, sign_u, log_pref, lf)


@njit
def diagonal_batch_numba(t, u, log_pref, ntrunc, lf):
    nb = t.shape[0]
    width = 0
    for i in range(nb):
        if ntrunc[i] + 1 > width:
            width = ntrunc[i] + 1
    out = np.zeros((nb, width))
    for i in range(nb):
        _diag_one_numba(t[i], u[i], log_pref[i], ntrunc[i], lf, out[i])
    return out


# ---------------------------------------------------------------- numpy path


def _signed_sum(logs, signs, shift):
    """Sum ``signs * exp(logs + shift)`` along the last axis, per sign group."""
    total = np.zeros(logs.shape[:-1])
    for s in (1.0, -1.0):
        grp = np.where(signs == s, logs, -np.inf)
        grp = np.sort(grp, axis=-1)
        with np.errstate(invalid="ignore"):
            vals = np.exp(grp + shift[..., None])
        total += s * np.nan_to_num(vals, nan=0.0).sum(axis=-1)
    return total


def _term_logs(n, a, d, log_t, log_u, lf):
    """Log-magnitude and sign of every term; invalid (n, a) pairs get -inf."""
    et = d + 2 * a
    eu = n - 2 * a
    valid = eu >= 0
    eu_c = np.where(valid, eu, 0)
    with np.errstate(invalid="ignore"):
        lt = np.where(et == 0, 0.0, et * log_t)
        lu = np.where(eu_c == 0, 0.0, eu_c * log_u)
    logs = lt + lu - lf[a] - lf[eu_c] - lf[a + d]
    return np.where(valid, logs, -np.inf), et, eu_c


def density_matrix_numpy(t, u, log_pref, nmax, lf):
    rho = np.zeros((nmax + 1, nmax + 1))
    log_t = _log_abs(t)
    log_u = _log_abs(u)
    sign_mt = -1.0 if t > 0.0 else 1.0
    sign_u = 1.0 if u >= 0.0 else -1.0
    for m in range(nmax + 1):
        n = np.arange(m % 2, m + 1, 2)
        a = np.arange(m // 2 + 1)
        nn, aa = np.meshgrid(n, a, indexing="ij")
        d = (m - nn) // 2
        logs, et, eu = _term_logs(nn, aa, d, log_t, log_u, lf)
        signs = np.where(et % 2 == 1, sign_mt, 1.0) * np.where(eu % 2 == 1, sign_u, 1.0)
        shift = 0.5 * (lf[m] + lf[n]) + log_pref
        vals = _signed_sum(logs, signs, shift)
        rho[m, n] = vals
        rho[n, m] = vals
    return rho


def diagonal_batch_numpy(t, u, log_pref, ntrunc, lf):
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    log_pref = np.asarray(log_pref, dtype=float)
    ntrunc = np.asarray(ntrunc)
    width = int(ntrunc.max()) + 1
    out = np.zeros((t.size, width))
    with np.errstate(divide="ignore"):
        log_t = np.log(np.abs(t))[:, None]
        log_u = np.log(np.abs(u))[:, None]
    sign_u = np.where(u >= 0.0, 1.0, -1.0)[:, None]
    for n in range(width):
        rows = ntrunc >= n
        a = np.arange(n // 2 + 1)[None, :]
        logs, et, eu = _term_logs(n, a, 0, log_t[rows], log_u[rows], lf)
        # (-T)^(2a) is always positive on the diagonal
        signs = np.broadcast_to(np.where(eu % 2 == 1, sign_u[rows], 1.0), logs.shape)
        shift = lf[n] + log_pref[rows]
        out[rows, n] = _signed_sum(logs, signs, shift)
    return out


if USE_NUMBA:
    density_matrix_kernel = density_matrix_numba
    diagonal_batch_kernel = diagonal_batch_numba
else:
    density_matrix_kernel = density_matrix_numpy
    diagonal_batch_kernel = diagonal_batch_numpy
