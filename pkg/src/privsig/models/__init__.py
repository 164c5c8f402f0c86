"""Data models for privsig."""
