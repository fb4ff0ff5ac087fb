"""Variable-coefficient pressure solves."""
