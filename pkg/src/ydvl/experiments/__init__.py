"""Regularisation sweeps and twin-run stability studies."""
