"""Two-loop vacuum-polarisation corrections for hydrogen-like heavy ions."""

__version__ = "0.1.0"
