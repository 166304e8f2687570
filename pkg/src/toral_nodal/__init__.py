"""Lattice-point arc statistics, restriction norms, and nodal intersection
counts for Laplace eigenfunctions on the square torus, restricted to curved
arcs.  Everything here is desk-scale and audit-oriented: exact integer
arithmetic wherever a statement is exact, quadrature with explicit refinement
everywhere else.
"""

__version__ = "0.1.0"
