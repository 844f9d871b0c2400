"""Shared test configuration: disable the per-example deadline so that
property tests do not flake on slow machines."""

from hypothesis import settings

settings.register_profile("cachecode", deadline=None)
settings.load_profile("cachecode")
