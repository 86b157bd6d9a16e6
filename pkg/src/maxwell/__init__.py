"""Maxwell package initialization."""
