"""Cohen-class phase-space quantum mechanics and the de Broglie-Bohm kernel."""

__version__ = "0.1.0"
