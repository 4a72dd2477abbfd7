"""quclab: a numerical laboratory for the fractional heat operator, its
degenerate extension problem, and the quantitative unique-continuation
inequalities that control vanishing order at desk scale."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: F401
