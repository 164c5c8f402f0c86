"""Solver adapters, one per solve mode."""
