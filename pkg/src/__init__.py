"""
Tire GPR - Intelligent tire lateral force estimation with Gaussian process regression
"""

__version__ = "1.0.0"
