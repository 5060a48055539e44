"""Numeric kernel backend selection.

Two complete implementations exist: ``_pykernels`` (numpy) and the compiled
``_ckernels`` extension. The default ("auto") picks per function based on
what is actually faster on the shapes this package runs: the sequential
advantage scan and categorical sampling go to the compiled core (numpy's
per-call overhead dominates them), while the matmul-bound MLP kernels stay
on numpy, whose BLAS beats plain compiled loops even at rollout batch
sizes. ``benchmarks/bench_kernels.py`` reproduces that comparison.

Set ``DECOYARENA_KERNELS=py`` or ``=c`` to force one backend everywhere
(``c`` raises if the extension did not build). Each backend is
deterministic; the two are not bit-identical to each other because their
reductions sum in different orders.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_requested = os.environ.get("DECOYARENA_KERNELS", "auto")
if _requested not in ("auto", "c", "py"):
    raise ValueError(f"DECOYARENA_KERNELS must be auto, c, or py; got {_requested!r}")
if _requested == "c" and _ckernels is None:
    raise ImportError("DECOYARENA_KERNELS=c but the compiled extension is unavailable")

if _requested == "py" or _ckernels is None:
    BACKEND = "python"
    mlp_forward = _pykernels.mlp_forward
    mlp_backward = _pykernels.mlp_backward
    gae_scan = _pykernels.gae_scan
    categorical_from_logits = _pykernels.categorical_from_logits
elif _requested == "c":
    BACKEND = "compiled"
    mlp_forward = _ckernels.mlp_forward
    mlp_backward = _ckernels.mlp_backward
    gae_scan = _ckernels.gae_scan
    categorical_from_logits = _ckernels.categorical_from_logits
else:
    BACKEND = "mixed"
    mlp_forward = _pykernels.mlp_forward
    mlp_backward = _pykernels.mlp_backward
    gae_scan = _ckernels.gae_scan
    categorical_from_logits = _ckernels.categorical_from_logits


def backend_name() -> str:
    return BACKEND


def compiled_available() -> bool:
    return _ckernels is not None
