"""
sisguard - Game-theoretic protection adoption over networked SIS epidemics.

Degree-based mean-field simulator and exact equilibrium solver.
"""

__version__ = "0.1.0"
__author__ = "sisguard Development Team"
