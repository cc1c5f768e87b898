"""Test package for meerr."""
