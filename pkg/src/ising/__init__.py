"""
Critical Ising model: exact solvers, transfer matrix, Monte Carlo and observables.
"""
