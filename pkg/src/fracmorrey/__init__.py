"""Fractional integrals of semigroups and Morrey/BMO-type norm estimators on grids."""

__version__ = "0.1.0"
