"""Periodic grid, sampled fields and Fourier-multiplier operators."""
