"""Lattice package initialization."""
