"""Keeps the tests directory importable (helpers module) under pytest."""
