"""modescope - order detection and mode selection for delay-coordinates DMD."""
__version__ = "0.1.0"
