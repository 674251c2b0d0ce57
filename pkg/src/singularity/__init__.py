"""
Block observables, Bhattacharyya fractional moments and the tilt certificate.
"""
