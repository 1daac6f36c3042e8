"""Backend selection for the flow kernels.

The compiled extension is used when it was built and importable; setting
``MONOCHAIN_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _flow_py

BACKEND = "python"
_impl = _flow_py

if os.environ.get("MONOCHAIN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _flow as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _flow_py

residual = _impl.residual
explicit_steps = _impl.explicit_steps
