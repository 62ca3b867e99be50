"""Text-to-SQL with rule-verified understanding, tree search and execution-checked selection."""

__version__ = "0.1.0"
