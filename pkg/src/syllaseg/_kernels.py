"""Select the trellis kernel: compiled extension if importable, else numpy.

Set ``SYLLASEG_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _trellis_py

python_forward = _trellis_py.forward
python_work_count = _trellis_py.work_count

compiled_forward = None
compiled_work_count = None
if os.environ.get("SYLLASEG_PURE_PYTHON", "") in ("", "0"):
    try:
        from ._trellis import forward as compiled_forward
        from ._trellis import work_count as compiled_work_count
    except ImportError:
        pass

HAVE_COMPILED = compiled_forward is not None
BACKEND = "cython" if HAVE_COMPILED else "python"

forward = compiled_forward if HAVE_COMPILED else python_forward
work_count = compiled_work_count if HAVE_COMPILED else python_work_count


def get_forward(backend=None):
    """Return the forward kernel for ``backend`` ('cython', 'python' or None for default)."""
    if backend is None:
        return forward
    if backend == "python":
        return python_forward
    if backend == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled trellis extension is not available")
        return compiled_forward
    raise ValueError(f"unknown backend {backend!r}")
