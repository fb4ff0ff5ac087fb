"""Lebesgue norms, sampled moduli of continuity and exponent bookkeeping."""
