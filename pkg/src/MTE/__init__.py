#!/usr/bin/env python
##############################################################################
#
# (c) 2025 MTE developers.
# All rights reserved.
#
# See LICENSE.rst for license information.
#
##############################################################################
"""Python package to find S1-invariant minimal tori in 3-dimensional
ellipsoids as closed geodesics of the orbit space, trace their
bifurcation branches from the Clifford torus, and lift them back to
tori in R4."""

# package version
from MTE.version import __version__  # noqa

# silence the pyflakes syntax checker
assert __version__ or True

# End of file
