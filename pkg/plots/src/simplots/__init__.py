"""simplots: paper-style figures from chisim run directories."""

__version__ = "0.1.0"

from .figures import FigureSpec, MissingColumnError, build_figure, render

__all__ = ["FigureSpec", "MissingColumnError", "build_figure", "render"]
