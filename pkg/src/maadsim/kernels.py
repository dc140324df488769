"""Kernel backend selection.

The compiled extension is used when importable; set ``MAADSIM_PURE_PYTHON=1``
to force the NumPy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
project_points = _pykernels.project_points
collision_flags = _pykernels.collision_flags

if os.environ.get("MAADSIM_PURE_PYTHON") != "1":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        project_points = _ckernels.project_points
        collision_flags = _ckernels.collision_flags
