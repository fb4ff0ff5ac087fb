"""Tests for the ydvl laboratory."""
