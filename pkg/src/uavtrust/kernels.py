"""Backend selection for the flight kernel.

The compiled extension is used when it was built; otherwise the pure-Python
module is used. Set ``UAVTRUST_PURE_PYTHON=1`` to force the fallback.
"""

import os

from uavtrust import _pykernels


def available_backends():
    backends = {"python": _pykernels}
    try:
        from uavtrust import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends


def _select():
    if os.environ.get("UAVTRUST_PURE_PYTHON", "") not in ("", "0"):
        return "python", _pykernels
    backends = available_backends()
    if "cython" in backends:
        return "cython", backends["cython"]
    return "python", _pykernels


BACKEND, _impl = _select()
fly = _impl.fly
