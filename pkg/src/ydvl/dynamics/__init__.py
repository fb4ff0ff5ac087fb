"""Fluid state, tendencies and time stepping."""
