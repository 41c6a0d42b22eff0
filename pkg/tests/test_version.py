"""Unit tests for version.py."""

import MTE  # noqa
from MTE.utils.io import header_lines


def test_package_version():
    """Ensure the package version is defined and not set to the initial
    placeholder."""
    assert hasattr(MTE, "__version__")
    assert MTE.__version__ != "0.0.0"


def test_version_in_output_headers():
    assert header_lines(None)[0] == f"package_version: {MTE.__version__}"
