"""Certified Cohn-Elkies packing bounds for bodies with octahedral symmetry."""

__version__ = "0.1.0"
