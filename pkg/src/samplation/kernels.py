"""Kernel backend selection.

The compiled extension is preferred when present; the numpy fallback is
functionally and bit-for-bit equivalent.  Set ``SAMPLATION_BACKEND=py`` or
``=c`` to force a lane (``c`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _pykernels

_KERNEL_NAMES = (
    "reservoir_indices",
    "reservoir_counts",
    "srs_indices",
    "srs_counts",
    "smote_fill",
    "knn_table",
)


def load_backend(name: str):
    """Return the kernel module for ``name`` ('py' or 'c')."""
    if name == "py":
        return _pykernels
    if name == "c":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r} (expected 'py' or 'c')")


def available_backends() -> list[str]:
    names = ["py"]
    try:
        load_backend("c")
        names.insert(0, "c")
    except ImportError:
        pass
    return names


def _select():
    requested = os.environ.get("SAMPLATION_BACKEND", "").strip().lower()
    if requested in ("", "c"):
        try:
            return load_backend("c"), "c"
        except ImportError:
            if requested == "c":
                raise RuntimeError(
                    "SAMPLATION_BACKEND=c but the compiled extension is not "
                    "available; rebuild the package or unset the variable"
                ) from None
            return _pykernels, "py"
    if requested == "py":
        return _pykernels, "py"
    raise RuntimeError(f"invalid SAMPLATION_BACKEND={requested!r} "
                       "(expected 'c' or 'py')")


_impl, BACKEND = _select()

reservoir_indices = _impl.reservoir_indices
reservoir_counts = _impl.reservoir_counts
srs_indices = _impl.srs_indices
srs_counts = _impl.srs_counts
smote_fill = _impl.smote_fill
knn_table = _impl.knn_table
