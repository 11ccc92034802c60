"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always available. Set IDEALCONV_KERNELS=py (or =c) to force a backend.
"""

from __future__ import annotations

import os

_requested = os.environ.get("IDEALCONV_KERNELS", "").strip().lower()

if _requested in ("py", "python", "fallback"):
    from . import _py as impl
elif _requested in ("c", "compiled", "fast"):
    from . import _fast as impl  # type: ignore[no-redef]
else:
    try:
        from . import _fast as impl  # type: ignore[no-redef]
    except ImportError:
        from . import _py as impl

BACKEND: str = impl.BACKEND

W_CONST = impl.W_CONST
W_ONE_OVER_N = impl.W_ONE_OVER_N
W_ONE_OVER_N_LOG = impl.W_ONE_OVER_N_LOG
W_ALTERNATING01 = impl.W_ALTERNATING01
W_POW = impl.W_POW

mix64 = impl.mix64
counter_mask = impl.counter_mask
counter_mask_idx = impl.counter_mask_idx
counter_select = impl.counter_select
counter_count_at = impl.counter_count_at
weight_values = impl.weight_values
kahan_sum = impl.kahan_sum
prefix_weight_at = impl.prefix_weight_at
masked_weight_at = impl.masked_weight_at
mask_count_at = impl.mask_count_at
hit_count_at = impl.hit_count_at


def available_backends() -> tuple[str, ...]:
    """Backends importable in this environment."""
    names = ["python"]
    try:
        from . import _fast  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return tuple(names)
