"""Verification package initialization."""
