"""Geometric audits and a numerical Fourier extension operator for the
perturbed saddle z = x*y + y**3/3."""

__version__ = "0.1.0"
