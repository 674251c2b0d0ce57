"""
Partition-function moments, tails and the overlap gradient.
"""
