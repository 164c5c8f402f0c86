"""Tests for privsig."""
