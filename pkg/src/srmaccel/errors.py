"""Exceptions shared across the package."""


class EvaluationError(Exception):
    """A residual evaluation left its domain (non-finite result or user-raised)."""


class LineSearchError(Exception):
    """Both backtracking step sizes fell below the floor without acceptance."""
