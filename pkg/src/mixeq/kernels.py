"""Backend selection for the numerical kernels.

Prefers the compiled extension (mixeq._kernels, Cython) and falls back to the
pure-Python reference (mixeq._kernels_py) when the extension is missing, e.g.
on installs without a C toolchain. Both expose the same functions with the
same semantics; BACKEND names the one in use.
"""

from __future__ import annotations

try:
    from mixeq import _kernels as _impl
except ImportError:  # pragma: no cover - depends on build environment
    from mixeq import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
fw_simplex = _impl.fw_simplex
mixed_support_search = _impl.mixed_support_search

__all__ = ["BACKEND", "fw_simplex", "mixed_support_search"]
