"""
Wavelet multi-resolution analysis, Besov-Hölder norms and subdomain integrals.
"""
