"""Side-channel key-recovery laboratory.

Signing and key-generation code with simulated leakage channels, and the
lattice and error-correction machinery that turns the leakage into keys.
"""

__version__ = "0.1.0"
