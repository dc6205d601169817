"""Exact dyadic-scale laboratory for a piecewise power-map model map.

Subpackages: numerics (exact log-polar arithmetic), params (dyadic
parameter sequences and growth certificates), modelmap (piecewise model
evaluation), geometry (annulus/petal atlas), dynamics (orbits, inverse
branches, inclusion certificates), dimension (covering-sum bounds),
curves (invariant-curve tracing and regularity checks), cli.
"""

__version__ = "0.1.0"
