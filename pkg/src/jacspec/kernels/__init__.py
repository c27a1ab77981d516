"""Dense kernel selection: compiled extension if built, numpy fallback otherwise.

Both lanes run the same floating-point operations in the same order and are
bit-identical on float64 inputs. Set JACSPEC_KERNELS=python (or =compiled)
to force a lane; the default prefers the extension and silently falls back.
"""

import os

from . import _pykernels

_forced = os.environ.get("JACSPEC_KERNELS", "").strip().lower()

if _forced in {"python", "py", "fallback"}:
    _impl = _pykernels
elif _forced in {"c", "compiled", "ext"}:
    from . import _ckernels as _impl
elif _forced:
    raise RuntimeError(f"JACSPEC_KERNELS={_forced!r}: expected 'compiled' or 'python'")
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

matmul = _impl.matmul
matvec = _impl.matvec
rmatvec = _impl.rmatvec
sq_frobenius = _impl.sq_frobenius
dot = _impl.dot
BACKEND = _impl.BACKEND

__all__ = ["matmul", "matvec", "rmatvec", "sq_frobenius", "dot", "BACKEND"]
