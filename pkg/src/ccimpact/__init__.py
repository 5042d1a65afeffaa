"""ccimpact: mining pipeline quantifying the association between
code-comment inconsistency and bug introduction in Java git histories."""

__version__ = "0.1.0"
