"""Universal algebraic geometry over finite algebras."""

__version__ = "0.1.0"
