"""Collective dephasing of few-qubit states: dynamics, genuine multipartite
negativity via a witness SDP, and Svetlichny nonlocality."""

from . import bell, channel, gme, linalg, sdp, states
from .channel import DephasingChannel, FieldOrientation, SpectralModel
from .errors import ColldephError
from .gme import genuine_negativity, verify_certificate

__version__ = "0.1.0"

__all__ = [
    "ColldephError",
    "DephasingChannel",
    "FieldOrientation",
    "SpectralModel",
    "bell",
    "channel",
    "genuine_negativity",
    "gme",
    "linalg",
    "sdp",
    "states",
    "verify_certificate",
]
