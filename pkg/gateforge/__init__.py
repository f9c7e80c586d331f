"""Control-field synthesis for quantum gates in multilevel systems."""

__version__ = "0.1.0"
