"""Exception hierarchy for kamcert.

Every rigorous routine either returns verified enclosures or raises one of
these.  "Inconclusive" outcomes (a containment test that fails) are distinct
from hard domain errors; callers that assemble certificates map the former to
inconclusive verdicts rather than crashes.
"""


class KamcertError(Exception):
    """Base class for all kamcert errors."""


class PrecisionMismatch(KamcertError):
    """Two intervals of different Precision entered one expression."""


class DivisionByZeroInterval(KamcertError):
    """Divisor interval contains zero."""


class DomainViolation(KamcertError):
    """Argument outside the domain of an elementary function or field."""


class SingularEnclosure(KamcertError):
    """An interval pivot contains zero; the enclosure may be singular."""


class NoEnclosure(KamcertError):
    """A rough enclosure could not be validated at the attempted step."""


class PrecisionExhausted(KamcertError):
    """Enclosure diameter blew past the configured bound; orbit lost."""


class LostTransversality(KamcertError):
    """Section derivative enclosure contains zero at a crossing."""


class BranchAmbiguous(KamcertError):
    """Energy chart cannot sign-separate the solved momentum."""


class InclusionFailed(KamcertError):
    """Newton/Krawczyk image not inside the candidate box (inconclusive)."""


class RootNotSeparated(KamcertError):
    """Candidate eigenvalue discs could not be made pairwise disjoint."""


class NewtonDiverged(KamcertError):
    """Interval Newton iteration failed to contract."""


class PairingDegenerate(KamcertError):
    """Eigenvector pairing constant enclosure contains zero."""


class ResonantDenominator(KamcertError):
    """An order-2 small divisor cannot be bounded away from zero."""


class UnresolvedResonance(KamcertError):
    """A cubic term is neither unavoidable nor verifiably non-resonant."""


class DegenerateConfiguration(KamcertError):
    """Three-body coordinate change undefined (coincident bodies)."""


class PoleAtMinusTwo(KamcertError):
    """The quartic parameter involution has a pole at c = -2."""


class EscapeDetected(KamcertError):
    """Non-rigorous explorer orbit left the configured domain."""


class ContinuationStalled(KamcertError):
    """Pseudo-arclength continuation failed to converge at a step."""


class ConfigError(KamcertError):
    """Malformed run configuration."""
