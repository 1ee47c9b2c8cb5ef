"""Backend selection for the eigensolver kernel.

The compiled Cython kernel is preferred when importable; the pure NumPy twin
is the reference implementation and always available. Selection happens once
at import time and can be forced with the environment variable
``BEKBENCH_BACKEND`` set to ``c`` or ``python`` (anything else, including
unset, means automatic).
"""

import os

from . import _kernels_py
from .errors import BekbenchError

_requested = os.environ.get("BEKBENCH_BACKEND", "auto").strip().lower()

if _requested == "python":
    _impl = _kernels_py
    _name = "python"
elif _requested == "c":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError as exc:  # pragma: no cover - depends on build env
        raise BekbenchError(
            "BEKBENCH_BACKEND=c requested but the compiled kernel is "
            "not importable"
        ) from exc
    _name = "c"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        _name = "c"
    except ImportError:  # pragma: no cover - depends on build env
        _impl = _kernels_py
        _name = "python"

jacobi_sweeps = _impl.jacobi_sweeps


def backend_name() -> str:
    """Name of the kernel backend selected at import time."""
    return _name
