"""Modelling toolkit for a monolithic AlGaAs photon-pair source with an on-chip polarization splitter."""

__version__ = "0.1.0"
