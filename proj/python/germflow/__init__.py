"""Semiclassical states on isotropic manifolds with complex germs.

Thin wrapper over the compiled extension; see the module docstrings there.
"""

try:
    from ._germflow import *  # noqa: F401,F403
    from ._germflow import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _germflow import *  # noqa: F401,F403
    from _germflow import __version__  # noqa: F401
