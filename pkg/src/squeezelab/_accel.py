"""Backend selection for the numeric kernels.

Set ``SQUEEZELAB_BACKEND=numpy`` to force the pure-numpy path, ``numba`` to
require numba. Unset means numba when importable.
"""
import os

_requested = os.environ.get("SQUEEZELAB_BACKEND", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"SQUEEZELAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
if _requested == "numba" and not HAVE_NUMBA:
    raise ImportError("SQUEEZELAB_BACKEND=numba but numba is not installed")

USE_NUMBA = HAVE_NUMBA and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if args and callable(args[0]):
        return args[0]
    return wrap
