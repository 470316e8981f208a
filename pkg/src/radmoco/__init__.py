"""Motion-compensated iterative reconstruction for golden-angle radial MRI."""

__version__ = "0.1.0"
