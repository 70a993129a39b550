"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class SchottkyLabError(Exception):
    """Base class for all package errors."""


# theta-core
class AsymmetricInput(SchottkyLabError, ValueError):
    """Period matrix differs from its transpose beyond tolerance."""


class NotPositiveDefinite(SchottkyLabError, ValueError):
    """Imaginary part of the period matrix is not positive definite."""


class RadiusCapExceeded(SchottkyLabError, RuntimeError):
    """Requested accuracy needs a lattice radius above the policy cap."""


class NoConvergence(SchottkyLabError, RuntimeError):
    """Newton search for a theta zero exhausted its budget."""


# identity-suite
class WrongGenus(SchottkyLabError, ValueError):
    pass


class DegenerateQuery(SchottkyLabError, ValueError):
    pass


class SingularSystem(SchottkyLabError, RuntimeError):
    pass


class NotOnDivisor(SchottkyLabError, ValueError):
    pass


class DegreeMismatch(SchottkyLabError, ValueError):
    pass


# diffop-algebra / spectral-curve
class TruncationUnderflow(SchottkyLabError, ValueError):
    pass


class NonUnitLeadingCoefficient(SchottkyLabError, ValueError):
    pass


class NotCommuting(SchottkyLabError, ValueError):
    pass


class NoSolution(SchottkyLabError, ValueError):
    pass


class NotMonic(SchottkyLabError, ValueError):
    pass


class NoRelationAtDepth(SchottkyLabError, RuntimeError):
    pass


class ResidueObstruction(SchottkyLabError, RuntimeError):
    """A logarithmic term would appear in the wave recursion.

    Attributes
    ----------
    s : int
        Index whose residue identity fails to propagate to ``s + 1``.
    residue : complex
        Size of the offending residue (largest y-coefficient).
    """

    def __init__(self, s: int, residue: float):
        super().__init__(f"residue obstruction propagating from s={s} (|res|={residue:.3e})")
        self.s = s
        self.residue = residue


# ba-kp
class DivisorCollision(SchottkyLabError, RuntimeError):
    pass


class GridTooCoarse(SchottkyLabError, ValueError):
    pass


class TrackLost(SchottkyLabError, RuntimeError):
    pass


class SeedNotFound(SchottkyLabError, RuntimeError):
    pass


# cli-io
class SchemaError(SchottkyLabError, ValueError):
    """Fixture document does not match the schema.

    Attributes
    ----------
    path : str
        JSON path of the offending node, e.g. ``$.tau[1]``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(SchottkyLabError, ValueError):
    pass


class UnknownCheck(SchottkyLabError, KeyError):
    pass
