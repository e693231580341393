"""degenlab: numerical laboratory for infinitely degenerate elliptic geometry."""

__version__ = "0.1.0"
