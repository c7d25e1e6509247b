"""Point vortex flow and Ginzburg-Landau relaxation in the unit disc."""

__version__ = "0.1.0"
