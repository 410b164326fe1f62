"""Exception taxonomy shared across the package.

Hard contract violations raise; mathematically meaningful negative outcomes
(refutations, inconclusive searches) are returned as values by the functions
that produce them.
"""


class CPRootsError(Exception):
    """Base class for all package errors."""


class NonSquare(CPRootsError):
    """Operation requires a square matrix."""


class NotHermitian(CPRootsError):
    """Hermiticity residual too large to be symmetrized away."""


class ShapeMismatch(CPRootsError):
    """Operand dimensions are inconsistent."""


class NoPrincipalLog(CPRootsError):
    """Matrix is singular or has spectrum on the closed negative real axis."""


class NotPSD(CPRootsError):
    """Matrix is not positive semidefinite within tolerance."""


class NotUNCP(CPRootsError):
    """Map is not unital completely positive within tolerance."""


class VerificationFailed(CPRootsError):
    """A computed candidate failed its defining identity check."""


class SupportNotAbsorbed(CPRootsError):
    """Compression precondition tau(p) >= p fails."""


class NotFaithful(CPRootsError):
    """State has a nontrivial kernel where full support is required."""


class NotAStateRoot(CPRootsError):
    """Map does not decompose as state map plus commuting nilpotent part.

    ``condition`` names the first violated requirement.
    """

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        super().__init__(f"{condition}{': ' + detail if detail else ''}")


class OrderOutOfRange(CPRootsError):
    """Requested root order lies outside the attainable range."""


class EpsilonNotFound(CPRootsError):
    """Perturbation scale tuning exhausted its grid without success."""


class ConstructionFailed(CPRootsError):
    """Assembled candidate failed its certificate.

    Carries the rejected certificate (when available) as ``certificate``.
    """

    def __init__(self, message: str, certificate=None):
        self.certificate = certificate
        super().__init__(message)


class BadRank(CPRootsError):
    """Support rank outside 1..d."""


class BadIndices(CPRootsError):
    """Shift-matrix indices inconsistent."""


class CaseInfeasible(CPRootsError):
    """No valid order split exists for the requested construction case."""


class BadGrid(CPRootsError):
    """Grid size or evaluation time incompatible with the discretization."""


class NotIdempotent(CPRootsError):
    """Map is not idempotent; by the equivalence theorem no asymptotic root exists."""
