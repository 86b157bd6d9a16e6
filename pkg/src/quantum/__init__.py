"""Quantum package initialization."""
