"""Stochastic 2D Euler with transport noise on the torus: particle and spectral
solvers, the measure-valued nonlinear term, and checks of the a priori bounds."""

__version__ = "0.1.0"
