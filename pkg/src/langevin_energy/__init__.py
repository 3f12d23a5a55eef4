"""Kinetic energy of the Langevin particle: exact sampling, Ito/Stratonovich
integration, spurious Stratonovich solutions and first-passage times."""

__version__ = "0.1.0"
