"""Independent reference implementations used to freeze expected values.

Nothing here imports uedkit. Each oracle recomputes a quantity by the most
direct route available (enumeration, exact fractions, simulation).
"""
