#!/usr/bin/env python
##############################################################################
#
# (c) 2025 MTE developers.
# All rights reserved.
#
# See LICENSE.rst for license information.
#
##############################################################################
"""Definition of __version__."""

#  We do not use the other three variables, but can be added back if needed.
#  __all__ = ["__date__", "__git_commit__", "__timestamp__", "__version__"]

# obtain version information
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("minimal_tori_ellipsoid")
except PackageNotFoundError:
    # running from a source checkout without installation
    __version__ = "0.0.0+unknown"

# End of file
