"""Per-step measurements and a priori bound checks."""
