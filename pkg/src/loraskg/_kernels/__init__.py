"""Kernel backend selection.

The BCH syndrome and decode loops dominate pipeline runtime, so a
compiled (Cython) variant is built when possible.  The pure-Python
module has the same contract and is used when the extension is missing
or when LORASKG_KERNEL=python forces it (useful for benchmarks and
for debugging the compiled path against the reference).
"""

import os

from . import gf2bch as _py

build_gf_tables = _py.build_gf_tables

if os.environ.get("LORASKG_KERNEL", "").lower() in ("python", "py"):
    _impl = _py
else:
    try:
        from . import _gf2bch_cy as _impl
    except ImportError:
        _impl = _py

BACKEND = _impl.BACKEND
syndrome_remainder = _impl.syndrome_remainder
decode_syndrome = _impl.decode_syndrome

__all__ = ["BACKEND", "build_gf_tables", "syndrome_remainder", "decode_syndrome"]
