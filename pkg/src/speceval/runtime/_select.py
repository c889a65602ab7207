"""Select the compiled interpreter kernel when available.

`speceval.runtime._evalcore` is the Cython-compiled build of `evalcore.py`
(same source). SPECEVAL_PURE=1 forces the pure-Python kernel.
"""

import os

if os.environ.get("SPECEVAL_PURE"):
    from . import evalcore

    COMPILED = False
else:
    try:
        from . import _evalcore as evalcore  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        from . import evalcore  # type: ignore[no-redef]

        COMPILED = False
