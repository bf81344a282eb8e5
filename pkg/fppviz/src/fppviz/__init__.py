"""Publication-style figures from fpplab CSV outputs.

Strictly one-way: this package reads the documented sweep / aggregate /
branching-probe CSV schemas and renders figures plus diffable text
sidecars.  It never recomputes a simulation.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]
