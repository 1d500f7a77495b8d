"""Backend selection for the collision sums.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used.  Setting ``FERMIKIN_BACKEND=python`` forces the fallback.
``FERMIKIN_THREADS`` caps the number of worker threads of the compiled loops.
"""

import os

from . import _kernels_py

KINDS = {"gaussian": 0, "lorentzian": 1}


def _load():
    if os.environ.get("FERMIKIN_BACKEND", "").lower() == "python":
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "compiled"


backend, BACKEND = _load()


def thread_count() -> int:
    """Worker count, capped by ``FERMIKIN_THREADS`` and the visible CPUs."""
    cpus = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    cap = os.environ.get("FERMIKIN_THREADS")
    if cap:
        try:
            return max(1, min(cpus, int(cap)))
        except ValueError:
            pass
    return max(1, cpus)


def kind_code(kind: str) -> int:
    try:
        return KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown delta kernel {kind!r}; expected one of {sorted(KINDS)}") from None


def use(name: str):
    """Switch backend at runtime ("compiled" or "python"); returns the previous name."""
    global backend, BACKEND
    prev = BACKEND
    if name == "python":
        backend, BACKEND = _kernels_py, "python"
    elif name == "compiled":
        from . import _kernels

        backend, BACKEND = _kernels, "compiled"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def scalar_collision(W, omega, vhat, add, sub, eps, kind="gaussian"):
    return backend.scalar_collision(W, omega, vhat, add, sub, eps, kind_code(kind), thread_count())


def scalar_entropy_production(W, omega, vhat, add, sub, eps, kind="gaussian"):
    return backend.scalar_entropy_production(W, omega, vhat, add, sub, eps, kind_code(kind), thread_count())


def hubbard_sums(W, omega, add, sub, eps_delta, eps_pv, kind="gaussian", with_pv=True):
    return backend.hubbard_sums(W, omega, add, sub, eps_delta, eps_pv, kind_code(kind), with_pv, thread_count())


def hubbard_entropy_production(evals, evecs, omega, add, sub, eps, kind="gaussian"):
    return backend.hubbard_entropy_production(evals, evecs, omega, add, sub, eps, kind_code(kind), thread_count())
