"""Mongolog: a Prolog fragment compiled to MongoDB-style aggregation pipelines."""

__version__ = "0.1.0"
