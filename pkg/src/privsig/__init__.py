"""
privsig - equilibrium solver for Gaussian privacy-signaling games

Computes, evaluates and numerically certifies linear Nash and Stackelberg
equilibria of the quadratic privacy-signaling game, the MMSE Gaussian
information bottleneck, and the scalar equilibria over noisy and discrete
channels.
"""

__version__ = "0.1.0"
__author__ = "privsig Team"

SCHEMA = "privsig/1"
