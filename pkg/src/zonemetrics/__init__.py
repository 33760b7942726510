"""Zone-restricted evaluation of object detectors and a spatially aware label-assignment simulator."""

__version__ = "0.1.0"
