"""OFDM link simulation and EVM measurement toolkit."""

try:
    from ._evmkit import *  # noqa: F401,F403  (installed wheel layout)
    from ._evmkit import __doc__  # noqa: F401
except ImportError:
    from _evmkit import *  # noqa: F401,F403  (build-tree layout, module on PYTHONPATH)
    from _evmkit import __doc__  # noqa: F401

__version__ = "0.1.0"
