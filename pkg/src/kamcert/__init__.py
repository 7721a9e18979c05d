"""kamcert: computer-assisted proofs of existence, linear stability and KAM
stability of periodic orbits of Hamiltonian systems.

Rigorous layers (interval arithmetic, validated integration, interval Newton,
verified spectra, Birkhoff normal forms) live alongside a non-rigorous
exploration toolkit; everything non-rigorous is confined to
:mod:`kamcert.approx` and :mod:`kamcert.explore`.
"""

from .intervals import Interval, ComplexInterval, Precision

__version__ = "0.1.0"

__all__ = ["Interval", "ComplexInterval", "Precision", "__version__"]
