"""Select the LSTM kernel backend at import.

The compiled extension is used when it was built; ``COREDRIFT_BACKEND=python``
forces the numpy fallback.
"""

import logging
import os

from . import _lstm_py

log = logging.getLogger(__name__)

_lstm_cy = None
if os.environ.get("COREDRIFT_BACKEND", "").lower() != "python":
    try:
        from . import _lstm_cy
    except ImportError:  # extension not built
        log.debug("compiled LSTM kernel unavailable, using numpy fallback")

BACKENDS = {"python": _lstm_py}
if _lstm_cy is not None:
    BACKENDS["cython"] = _lstm_cy

BACKEND = "cython" if _lstm_cy is not None else "python"
_active = BACKENDS[BACKEND]


def lstm_forward(W, b, X):
    return _active.lstm_forward(W, b, X)


def lstm_backward(W, X, hs, cs, gates, dh_last):
    return _active.lstm_backward(W, X, hs, cs, gates, dh_last)
