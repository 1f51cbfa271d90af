"""Kernel backend selection.

Prefers the compiled extension and falls back to the pure-Python twin.
``PROSUB_KERNEL=python`` or ``PROSUB_KERNEL=cython`` forces a backend
(the latter raises if the extension is unavailable).  Both backends are
bit-identical; see ``benchmarks/bench_kernel.py`` for the speed gap.
"""

import os

from . import _kernel_py

_forced = os.environ.get("PROSUB_KERNEL", "")
if _forced == "python":
    _impl = _kernel_py
elif _forced == "cython":
    from . import _kernel as _impl  # noqa: F401  (raises if not built)
elif _forced:
    raise ValueError(f"PROSUB_KERNEL must be 'python' or 'cython', not {_forced!r}")
else:
    try:
        from . import _kernel as _impl
    except ImportError:
        _impl = _kernel_py

BACKEND = _impl.BACKEND

ngram_features = _impl.ngram_features
featurize_all = _impl.featurize_all
score_csr = _impl.score_csr
sgd_epoch = _impl.sgd_epoch
mean_logloss = _impl.mean_logloss

# The hash function itself is part of the model-file contract; the pure
# implementation is the documented reference.
hash_ngram = _kernel_py.hash_ngram
BOUNDARY = _kernel_py.BOUNDARY
