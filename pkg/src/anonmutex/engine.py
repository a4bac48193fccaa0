"""Backend selection for the stepping kernel.

The compiled extension is used when it imported successfully; otherwise the
pure-Python twin takes over.  Set ``ANONMUTEX_PURE=1`` to force the fallback
(used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

from . import _kernel_py as pure_backend

compiled_backend = None
if not os.environ.get("ANONMUTEX_PURE"):
    try:
        from . import _kernel as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

active_backend = compiled_backend if compiled_backend is not None else pure_backend

BACKEND = active_backend.BACKEND_NAME

Fig1Kernel = active_backend.Fig1Kernel
splitmix64 = active_backend.splitmix64
schedule_seed = active_backend.schedule_seed
section_of_loc = active_backend.section_of_loc


def available_backends():
    """Mapping of backend name to module, for benchmarks and parity tests."""
    backends = {"pure": pure_backend}
    if compiled_backend is not None:
        backends["compiled"] = compiled_backend
    return backends
