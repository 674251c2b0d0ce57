"""Manifest-driven experiment runs, result caching and acceptance reports."""
