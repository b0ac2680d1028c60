"""
Bundled training regimes.

Each module defines one or two regime classes and registers them with
:func:`altm.regime.register` at import time, so importing this package is
enough to make ``get_regime("sequential")`` and friends work.  The names
come from :class:`altm.regime.RegimeKind`; ``list_regimes()`` shows what
is currently available.
"""

from __future__ import annotations

from . import active_memory, interleaved, multitask, sequential  # noqa: F401  (registers regimes)

__all__: list[str] = []
