"""Click-log mining and learning-to-rank toolkit for query recommendation."""

__version__ = "0.1.0"
