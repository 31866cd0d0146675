"""Spectral toolkit for a dispersive wave equation on the circle.

Subpackages cover: the spectral core (fields), the wave dynamics (bo),
Gibbs sampling of the invariant ensemble (gibbs), pole solitons and their
Coulomb reformulation (solitons), circular log-gases (gas), optimal
transport on the circle (transport) and the shallow-channel Euler limit
(euler).
"""

from .fields import FourierField

__all__ = ["FourierField"]
__version__ = "0.1.0"
