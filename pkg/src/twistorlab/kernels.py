"""Kernel selection: compiled extension if importable, NumPy otherwise."""
import os

from . import _fallback

BACKEND = "python"

if os.environ.get("TWISTORLAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import geometric_product, outer_product  # noqa: F401

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

if BACKEND == "python":
    geometric_product = _fallback.geometric_product
    outer_product = _fallback.outer_product

reorder_parity = _fallback.reorder_parity

__all__ = ["BACKEND", "geometric_product", "outer_product", "reorder_parity"]
