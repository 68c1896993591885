"""Tree kernel backend selection.

The compiled Cython kernel is used when its extension module imports; the
pure-NumPy kernel is the fallback. ``SITABENCH_TREE_BACKEND=python`` or
``=cython`` forces a choice (forcing cython raises if the extension is not
built).
"""
from __future__ import annotations

import os

from . import _tree_py

_FORCED = os.environ.get("SITABENCH_TREE_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _tree_py
    BACKEND_NAME = "python"
elif _FORCED == "cython":
    from . import _tree_cy as _impl  # noqa: F401

    BACKEND_NAME = "cython"
elif _FORCED:
    raise RuntimeError(f"unknown SITABENCH_TREE_BACKEND {_FORCED!r}")
else:
    try:
        from . import _tree_cy as _impl  # type: ignore[no-redef]

        BACKEND_NAME = "cython"
    except ImportError:
        _impl = _tree_py
        BACKEND_NAME = "python"

build_tree = _impl.build_tree
predict_tree = _impl.predict_tree


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return _tree_py
    if name == "cython":
        from . import _tree_cy

        return _tree_cy
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["python"]
    try:
        from . import _tree_cy  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names
