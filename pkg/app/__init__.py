"""
Chern-Simons-Higgs equations on finite weighted graphs: maximal solutions,
critical coupling and diagnostics.
"""

__version__ = "1.0.0"
