"""Hot-kernel backend selection.

The compiled Cython core is used when available; otherwise the numpy
fallback. Both produce bit-identical results, so the choice only affects
speed. Set ``SMFG_BACKEND=numpy`` (or ``cython``) to force one explicitly.
"""

import os

from . import _fallback


def _load_default():
    requested = os.environ.get("SMFG_BACKEND", "").strip().lower()
    if requested == "numpy":
        return _fallback
    try:
        from . import _core
    except ImportError:
        if requested == "cython":
            raise ImportError(
                "SMFG_BACKEND=cython requested but the compiled extension "
                "is not available; reinstall with build tools present"
            ) from None
        return _fallback
    return _core


_impl = _load_default()


def get_backend(name=None):
    """Return a kernel namespace: the active one, or 'numpy'/'cython' by name."""
    if name is None:
        return _impl
    if name == "numpy":
        return _fallback
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")


def use_backend(name):
    """Switch the active backend (mainly for tests and benchmarks)."""
    global _impl, backend_name
    _impl = get_backend(name)
    backend_name = _impl.BACKEND


def project_rows(v):
    return _impl.project_rows(v)


def sample_from_rows(policies, uniforms):
    return _impl.sample_from_rows(policies, uniforms)


def uniform_actions(uniforms, k):
    return _impl.uniform_actions(uniforms, k)


def trpa_update_rows(policies, rewards, eta, tau):
    return _impl.trpa_update_rows(policies, rewards, eta, tau)


backend_name = _impl.BACKEND
