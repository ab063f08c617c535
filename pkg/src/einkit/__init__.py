"""Numerical toolkit for the conformal geometry of the Einstein universe."""
