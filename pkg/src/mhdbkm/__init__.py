"""Pseudo-spectral 3D MHD on the torus with a Littlewood-Paley blow-up monitor."""

__version__ = "0.1.0"
