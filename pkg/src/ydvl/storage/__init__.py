"""Persistence helpers for snapshots and tables."""
