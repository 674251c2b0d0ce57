"""
Polynomial chaos kernels, approximation ladder and Lindeberg estimates.
"""
