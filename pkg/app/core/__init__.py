"""
Core module: configuration, logging, errors and the numerical solver.
"""
