"""
Lattice discretization of planar domains and dyadic block grids.
"""
