"""Reference parameter sets: the three measured states, their reference
photon-number-basis matrices and the fitted OPO spectrum.

Values quoted from the source measurement keep their printed precision.
Derived numbers are computed here from those quotes, never hand-copied.
"""
import math

import numpy as np

from .gaussian import GaussianState
from .spectrum import SpectrumModel

# Squeezed / anti-squeezed variance in dB relative to vacuum, measured at 5 MHz
# with 30, 150 and 600 mW of second-harmonic pump (each +-0.1 dB).
MEASURED_PAIRS_DB = [(-2.9, 2.9), (-6.2, 6.7), (-11.5, 16.0)]
MEASURED_PAIR_ERROR_DB = 0.1

# Reference vacuum fraction 1 - eta*gamma and its uncertainty.
VACUUM_FRACTION = 0.048
VACUUM_FRACTION_ERROR = 0.002

# States used for the reference density matrices. The first is a pure
# 3.05 dB state degraded by 4.8 % loss; the others are the measured pairs.
MATRIX_STATES_DB = [(-2.84, 2.94), (-6.2, 6.7), (-11.5, 16.0)]

# Reference matrices, 0 <= m, n <= 10, four decimals. They were computed with
# photon numbers up to 170 and normalised by that trace.
MATRIX_SOURCE_TRUNCATION = 170
MATRIX_PRINT_TOLERANCE = 5e-5

_MINUS_2P84_DB = [
    [0.9416, 0.0000, -0.2137, 0.0000, 0.0594, 0.0000, -0.0174, 0.0000, 0.0052, 0.0000, -0.0016],
    [0.0000, 0.0049, 0.0000, -0.0019, 0.0000, 0.0007, 0.0000, -0.0002, 0.0000, 0.0001, 0.0000],
    [-0.2137, 0.0000, 0.0485, 0.0000, -0.0135, 0.0000, 0.0040, 0.0000, -0.0012, 0.0000, 0.0004],
    [0.0000, -0.0019, 0.0000, 0.0008, 0.0000, -0.0003, 0.0000, 0.0001, 0.0000, 0.0000, 0.0000],
    [0.0594, 0.0000, -0.0135, 0.0000, 0.0038, 0.0000, -0.0011, 0.0000, 0.0003, 0.0000, -0.0001],
    [0.0000, 0.0007, 0.0000, -0.0003, 0.0000, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
    [-0.0174, 0.0000, 0.0040, 0.0000, -0.0011, 0.0000, 0.0003, 0.0000, -0.0001, 0.0000, 0.0000],
    [0.0000, -0.0002, 0.0000, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
    [0.0052, 0.0000, -0.0012, 0.0000, 0.0003, 0.0000, -0.0001, 0.0000, 0.0000, 0.0000, 0.0000],
    [0.0000, 0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
    [-0.0016, 0.0000, 0.0004, 0.0000, -0.0001, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0000],
]

_MINUS_6P2_DB = [
    [0.7538, 0.0000, -0.3360, 0.0000, 0.1834, 0.0000, -0.1056, 0.0000, 0.0622, 0.0000, -0.0372],
    [0.0000, 0.0131, 0.0000, -0.0101, 0.0000, 0.0071, 0.0000, -0.0048, 0.0000, 0.0032, 0.0000],
    [-0.3360, 0.0000, 0.1500, 0.0000, -0.0820, 0.0000, 0.0473, 0.0000, -0.0279, 0.0000, 0.0167],
    [0.0000, -0.0101, 0.0000, 0.0078, 0.0000, -0.0055, 0.0000, 0.0037, 0.0000, -0.0025, 0.0000],
    [0.1834, 0.0000, -0.0820, 0.0000, 0.0449, 0.0000, -0.0259, 0.0000, 0.0153, 0.0000, -0.0092],
    [0.0000, 0.0071, 0.0000, -0.0055, 0.0000, 0.0039, 0.0000, -0.0026, 0.0000, 0.0018, 0.0000],
    [-0.1056, 0.0000, 0.0473, 0.0000, -0.0259, 0.0000, 0.0150, 0.0000, -0.0089, 0.0000, 0.0053],
    [0.0000, -0.0048, 0.0000, 0.0037, 0.0000, -0.0026, 0.0000, 0.0018, 0.0000, -0.0012, 0.0000],
    [0.0622, 0.0000, -0.0279, 0.0000, 0.0153, 0.0000, -0.0089, 0.0000, 0.0053, 0.0000, -0.0032],
    [0.0000, 0.0032, 0.0000, -0.0025, 0.0000, 0.0018, 0.0000, -0.0012, 0.0000, 0.0008, 0.0000],
    [-0.0372, 0.0000, 0.0167, 0.0000, -0.0092, 0.0000, 0.0053, 0.0000, -0.0032, 0.0000, 0.0019],
]

_MINUS_11P5_DB = [
    [0.3026, 0.0000, -0.1946, 0.0000, 0.1532, 0.0000, -0.1272, 0.0000, 0.1082, 0.0000, -0.0933],
    [0.0000, 0.0126, 0.0000, -0.0140, 0.0000, 0.0143, 0.0000, -0.0140, 0.0000, 0.0135, 0.0000],
    [-0.1946, 0.0000, 0.1256, 0.0000, -0.0993, 0.0000, 0.0828, 0.0000, -0.0707, 0.0000, 0.0613],
    [0.0000, -0.0140, 0.0000, 0.0156, 0.0000, -0.0159, 0.0000, 0.0157, 0.0000, -0.0151, 0.0000],
    [0.1532, 0.0000, -0.0993, 0.0000, 0.0789, 0.0000, -0.0660, 0.0000, 0.0566, 0.0000, -0.0493],
    [0.0000, 0.0143, 0.0000, -0.0159, 0.0000, 0.0162, 0.0000, -0.0160, 0.0000, 0.0155, 0.0000],
    [-0.1272, 0.0000, 0.0828, 0.0000, -0.0660, 0.0000, 0.0555, 0.0000, -0.0478, 0.0000, 0.0417],
    [0.0000, -0.0140, 0.0000, 0.0157, 0.0000, -0.0160, 0.0000, 0.0158, 0.0000, -0.0153, 0.0000],
    [0.1082, 0.0000, -0.0707, 0.0000, 0.0566, 0.0000, -0.0478, 0.0000, 0.0413, 0.0000, -0.0362],
    [0.0000, 0.0135, 0.0000, -0.0151, 0.0000, 0.0155, 0.0000, -0.0153, 0.0000, 0.0148, 0.0000],
    [-0.0933, 0.0000, 0.0613, 0.0000, -0.0493, 0.0000, 0.0417, 0.0000, -0.0362, 0.0000, 0.0318],
]

REFERENCE_MATRICES = {
    (-2.84, 2.94): np.array(_MINUS_2P84_DB),
    (-6.2, 6.7): np.array(_MINUS_6P2_DB),
    (-11.5, 16.0): np.array(_MINUS_11P5_DB),
}

# Reference photon-number figures.
P1_WEAK_STATE = 0.0049  # P(1) of the -2.84 dB state
CONDITIONAL_MEAN = 5.93  # mean photon number given a click, spectrally weighted
PHOTON_RATE = 2.79e8  # photons / s over the half free spectral range
PHOTON_POWER = 52e-12  # W

# Fitted spectrum: pump at 53.5 % of threshold, eta*gamma = 95.2 %,
# output coupler T = 12 %, round-trip loss L = 0.1 %, HWHM bandwidth 170 MHz.
PUMP_RATIO = 0.535
ETA_GAMMA = 0.952
TRANSMITTANCE = 0.12
ROUND_TRIP_LOSS = 0.001
BANDWIDTH = 170e6
HALF_POINT_DB = -2.7
HALF_FSR = 5.5e9
BIN_WIDTH = 100e3

# The round-trip length is not given independently. Back-solved from the bandwidth via
# f_bw = kappa (1 + sqrt p) / (4 pi): kappa ~ 1.234e9 rad/s, l ~ 29.4 mm.
KAPPA = 4.0 * math.pi * BANDWIDTH / (1.0 + math.sqrt(PUMP_RATIO))
ROUND_TRIP_LENGTH = (TRANSMITTANCE + ROUND_TRIP_LOSS) * 299_792_458.0 / KAPPA
# Rounded value used for the 5 MHz checks.
KAPPA_ROUNDED = 1.25e9


def measured_states():
    return [GaussianState.from_db(a, b) for a, b in MEASURED_PAIRS_DB]


def matrix_states():
    return [GaussianState.from_db(a, b) for a, b in MATRIX_STATES_DB]


def spectrum_model() -> SpectrumModel:
    return SpectrumModel.from_cavity(PUMP_RATIO, ETA_GAMMA, TRANSMITTANCE, ROUND_TRIP_LOSS,
                                     ROUND_TRIP_LENGTH)


def as_dict() -> dict:
    """Plain-data view for serialisation."""
    return {
        "measured_pairs_db": [list(p) for p in MEASURED_PAIRS_DB],
        "vacuum_fraction": VACUUM_FRACTION,
        "matrix_states_db": [list(p) for p in MATRIX_STATES_DB],
        "reference_matrices": {f"{a:+g}/{b:+g} dB": m.tolist()
                               for (a, b), m in REFERENCE_MATRICES.items()},
        "spectrum": {
            "pump_ratio": PUMP_RATIO,
            "eta_gamma": ETA_GAMMA,
            "transmittance": TRANSMITTANCE,
            "round_trip_loss": ROUND_TRIP_LOSS,
            "kappa": KAPPA,
            "round_trip_length_m": ROUND_TRIP_LENGTH,
            "bandwidth_hz": BANDWIDTH,
        },
    }
