"""Yang-Mills package initialization."""
