"""
Random field, white noise and scaled external fields.
"""
