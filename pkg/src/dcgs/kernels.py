"""Backend selection for the hot loops.

The compiled ``_ckernels`` extension is used when it is importable; otherwise
(or when the environment variable ``DCGS_PURE_PYTHON`` is set to a non-empty
value other than ``0``) the numpy fallback in ``_pykernels`` is used. Both
expose the same functions and constants.
"""

import os

from . import _pykernels

_force_py = os.environ.get("DCGS_PURE_PYTHON", "") not in ("", "0")

_backend = _pykernels
if not _force_py:
    try:
        from . import _ckernels as _backend  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _backend = _pykernels

BACKEND = "cython" if _backend is not _pykernels else "python"

ATOM_L1 = _pykernels.ATOM_L1
ATOM_SIMPLEX = _pykernels.ATOM_SIMPLEX
STATUS_CONVERGED = _pykernels.STATUS_CONVERGED
STATUS_BUDGET = _pykernels.STATUS_BUDGET
STATUS_STALLED = _pykernels.STATUS_STALLED

fw_atoms = _backend.fw_atoms
pairwise_atoms = _backend.pairwise_atoms
top_singular_pair = _backend.top_singular_pair
line_search_quadratic = _pykernels.line_search_quadratic


def backends():
    """All importable backends by name, for benchmarks and cross-checks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:  # pragma: no cover
        pass
    return out
