"""Select the compiled kernels when importable, else the numpy fallback."""
import os

from . import _purepy

NAME = "python"
kernels = _purepy

if os.environ.get("ASKL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        NAME = "cython"
    except ImportError:
        pass
