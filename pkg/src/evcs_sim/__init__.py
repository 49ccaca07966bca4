"""Co-simulation of the EV charging ecosystem under remote attack, coupled to a grid model."""

__version__ = "0.1.0"
