"""Community battery investment planning under PV and EV uncertainty."""

__version__ = "0.1.0"

from .cli import app, main

__all__ = ["__version__", "app", "main"]
