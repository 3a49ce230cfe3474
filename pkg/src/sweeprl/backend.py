"""Kernel backend selection.

The hot numeric kernels in :mod:`sweeprl.kernels` are plain numpy code that
gets compiled with ``numba.njit`` when the "numba" backend is active.  The
backend is chosen once, at import time, from the ``SWEEPRL_BACKEND``
environment variable:

* ``SWEEPRL_BACKEND=numba`` -- force JIT compilation (error if numba missing)
* ``SWEEPRL_BACKEND=numpy`` -- run the identical source uncompiled
* unset -- use numba when it imports, else fall back to numpy

``load_kernels`` loads a fresh copy of the kernel module under either
backend, which is how the equivalence tests and the benchmark script compare
the two paths inside one process.
"""

from __future__ import annotations

import importlib.util
import os
import sys

VALID_BACKENDS = ("numba", "numpy")
ENV_VAR = "SWEEPRL_BACKEND"


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend(name: str | None = None) -> str:
    """Resolve a backend name ('numba' or 'numpy') from arg or environment."""
    if name is None:
        name = os.environ.get(ENV_VAR, "").strip().lower() or None
    if name is None:
        return "numba" if numba_available() else "numpy"
    if name not in VALID_BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {VALID_BACKENDS}")
    if name == "numba" and not numba_available():
        raise RuntimeError("SWEEPRL_BACKEND=numba but numba is not importable")
    return name


def make_jit(backend: str):
    """Return the decorator applied to every kernel under `backend`."""
    if backend == "numba":
        from numba import njit

        def jit(func):
            return njit(cache=True)(func)

        return jit

    def jit(func):
        return func

    return jit


def load_kernels(backend: str):
    """Load an independent instance of sweeprl.kernels under `backend`.

    The default instance (``import sweeprl.kernels``) picks its backend from
    the environment; this loads a second module object pinned to `backend`
    without touching the default one.
    """
    backend = resolve_backend(backend)
    from . import kernels as default_mod

    name = f"sweeprl._kernels_{backend}"
    if name in sys.modules:
        return sys.modules[name]
    spec = importlib.util.spec_from_file_location(name, default_mod.__file__)
    mod = importlib.util.module_from_spec(spec)
    old = os.environ.get(ENV_VAR)
    os.environ[ENV_VAR] = backend
    try:
        spec.loader.exec_module(mod)
    finally:
        if old is None:
            os.environ.pop(ENV_VAR, None)
        else:
            os.environ[ENV_VAR] = old
    sys.modules[name] = mod
    return mod
