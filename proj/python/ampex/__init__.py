"""Extraction of amplitude-encoded multivariate functions.

Thin python surface over the C++ core: cosine expansions, recursive-SVD
matrix-product-state compression, alternating-SVD circuit fits, and the
worst-of put Monte Carlo target generator.
"""

__version__ = "0.1.0"

try:
    from ._ampex import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # in-tree builds put the module next to the package
    from _ampex import *  # noqa: F401,F403
