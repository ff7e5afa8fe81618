"""Exact error-bound exponents for polynomial variational inequalities.

The exponent attached to an instance is 1/D where D is an explicit
(and typically astronomically large) integer determined by the problem
dimensions and degrees.  Everything here is exact integer/rational
arithmetic except ``pow_alpha``, which evaluates v**alpha stably.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import UnsupportedSetError
from .gap import ViInstance

__all__ = [
    "ExponentCertificate",
    "exponent_denominator",
    "alpha_for_instance",
    "resolve_alpha",
    "pow_alpha",
]


def exponent_denominator(n: int, d: int) -> int:
    """d * (3d - 3)**(n - 1) for d >= 2, and 1 for d = 1.  Exact int."""
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if d == 1:
        return 1
    return d * (3 * d - 3) ** (n - 1)


@dataclass(frozen=True)
class ExponentCertificate:
    """Both exponents for one instance, kept exact.

    ``alpha_general`` is valid for any compact polynomial feasible set;
    ``alpha_convex`` is the sharper value that only applies when the set
    is convex (``convex_applicable`` records whether the instance
    declared convexity).
    """

    n: int
    r: int
    s: int
    d: int
    R_general: int
    R_convex: int
    alpha_general: Fraction
    alpha_convex: Fraction
    convex_applicable: bool

    def __post_init__(self) -> None:
        if self.R_general < 1 or self.R_convex < 1:
            raise ValueError("exponent denominators must be >= 1")
        if self.alpha_general != Fraction(1, self.R_general):
            raise ValueError("alpha_general must equal 1/R_general exactly")
        if self.alpha_convex != Fraction(1, self.R_convex):
            raise ValueError("alpha_convex must equal 1/R_convex exactly")

    @property
    def context(self) -> dict[str, str]:
        convex = (
            "applies: feasible set declared convex"
            if self.convex_applicable
            else "not applicable: feasible set not declared convex"
        )
        return {
            "alpha_general": "applies to any compact feasible set of this form",
            "alpha_convex": convex,
        }

    def to_wire(self) -> dict[str, object]:
        """JSON-safe form: big integers as decimal strings, rationals as '1/D'."""
        return {
            "n": self.n,
            "r": self.r,
            "s": self.s,
            "d": self.d,
            "R_general": str(self.R_general),
            "R_convex": str(self.R_convex),
            "alpha_general": f"1/{self.R_general}",
            "alpha_convex": f"1/{self.R_convex}",
            "convex_applicable": self.convex_applicable,
            "context": self.context,
        }


def alpha_for_instance(inst: ViInstance) -> ExponentCertificate:
    """Exponents for an instance from its dimensions and a shared degree bound.

    d is the max degree across the map and every constraint polynomial.
    """
    n = inst.n
    r = len(inst.omega.ineqs)
    s = len(inst.omega.eqs)
    d = inst.F.degree
    for g in inst.omega.ineqs:
        d = max(d, g.degree)
    for h in inst.omega.eqs:
        d = max(d, h.degree)
    d = max(d, 1)
    R_general = exponent_denominator(n * (n + 3) + r * (n + 2) + s * (n + 2), d + 2)
    R_convex = exponent_denominator(2 * n + 2 * r + 2 * s, d + 2)
    return ExponentCertificate(
        n=n,
        r=r,
        s=s,
        d=d,
        R_general=R_general,
        R_convex=R_convex,
        alpha_general=Fraction(1, R_general),
        alpha_convex=Fraction(1, R_convex),
        convex_applicable=inst.omega.declared_convex,
    )


def resolve_alpha(text: str, inst: ViInstance) -> Fraction:
    """Turn a user-facing exponent choice into an exact Fraction.

    Accepts the keyword ``general`` or ``convex`` (resolved through
    the instance's certificate) or any rational literal in (0, 1].
    Raises ValueError for bad grammar/range and UnsupportedSetError
    when ``convex`` is requested without a declared-convex set.
    """
    if text == "general":
        return alpha_for_instance(inst).alpha_general
    if text == "convex":
        cert = alpha_for_instance(inst)
        if not cert.convex_applicable:
            raise UnsupportedSetError(
                "exponent 'convex' needs an instance whose feasible set "
                "is declared convex")
        return cert.alpha_convex
    try:
        alpha = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(
            f"cannot parse exponent {text!r} "
            "(use a rational like 1/648, a decimal, or general/convex)")
    if not 0 < alpha <= 1:
        raise ValueError(f"exponent must lie in (0, 1], got {alpha}")
    return alpha


def pow_alpha(v: float, alpha: Fraction) -> float:
    """v**alpha for v >= 0, computed as exp(alpha * ln v).

    float(alpha) is correctly rounded even when the denominator far
    exceeds 2**64, so this stays meaningful for exponents like 1e-10
    where a naive v**float(alpha) in one step would too (the log-domain
    form is what the verification code uses for comparisons; this is the
    matching value form).
    """
    v = float(v)
    if v < 0:
        raise ValueError(f"pow_alpha needs v >= 0, got {v}")
    if v == 0.0:
        return 0.0
    return math.exp(math.log(v) * float(alpha))
