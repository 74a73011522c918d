"""Selection and certified evaluation of z.

z is the root of 9x¹⁶ − 14x⁸ + 9 closest to −0.996393 + 0.0848571i.  The
substitution y = x⁸ gives 9y² − 14y + 9, with roots y± = (7 ± 4√2 i)/9, both
of modulus one.  Isolating all sixteen roots shows that the selected z has
z⁸ = y₋ = (7 − 4√2 i)/9 and equals minus the principal eighth root of y₋.
That description is exact, so z can be evaluated at any precision without
repeating the root isolation; :func:`z_value` performs the isolation and
cross-checks the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from flint import acb, arb, fmpz_poly

from ..errors import PrecisionError
from .scalar import Scalar, working_precision

Z_POLYNOMIAL = (9, 0, 0, 0, 0, 0, 0, 0, -14, 0, 0, 0, 0, 0, 0, 0, 9)  # descending
Z_APPROX = complex(-0.996393, 0.0848571)


@dataclass(frozen=True)
class ZRootSelection:
    """Precision-independent description of the chosen root.

    ``y_imag_sign`` picks which root of 9y² − 14y + 9 equals z⁸.
    ``eighth_root_index`` is k in z = ζ₈ᵏ · (principal eighth root of z⁸).
    """

    y_imag_sign: int = -1
    eighth_root_index: int = 4


SELECTION = ZRootSelection()


def _y_ball(sign: int) -> acb:
    s2 = arb(2).sqrt()
    return acb(arb(7), sign * 4 * s2) / 9


@lru_cache(maxsize=64)
def z_closed_form(prec: int) -> acb:
    """Ball for z from the stored selection (no root isolation)."""
    with working_precision(prec + 16):
        y = _y_ball(SELECTION.y_imag_sign)
        r = y.root(8)
        val = acb(arb(SELECTION.eighth_root_index, 0) / 4).exp_pi_i() * r
    with working_precision(prec):
        return +val


def isolate_roots(prec: int) -> list[acb]:
    """Certified enclosures of all 16 roots (pairwise disjoint)."""
    with working_precision(prec):
        poly = fmpz_poly(list(reversed(Z_POLYNOMIAL)))
        try:
            roots = [r for r, mult in poly.complex_roots()]
        except Exception as exc:  # flint raises ValueError when it cannot isolate
            raise PrecisionError(f"root isolation failed at {prec} bits: {exc}") from exc
    if len(roots) != 16:
        raise PrecisionError(f"isolated {len(roots)} roots at {prec} bits, expected 16")
    return roots


def z_value(precision: int) -> Scalar:
    """Certified enclosure of z obtained by isolating all 16 roots.

    The selected ball is certified to be strictly closer to the printed
    approximation than any other root, and it must overlap the closed form.
    """
    if precision < 64:
        raise PrecisionError("z_value requires at least 64 bits")
    roots = isolate_roots(precision)
    with working_precision(precision):
        target = acb(Z_APPROX.real, Z_APPROX.imag)
        dists = [abs(r - target) for r in roots]
        best = min(range(16), key=lambda i: float(dists[i].mid()))
        for i, d in enumerate(dists):
            if i != best and not bool(dists[best] < d):
                raise PrecisionError("cannot certify which root is nearest the approximation")
        for i, r in enumerate(roots):
            if i != best and r.overlaps(roots[best]):
                raise PrecisionError("root enclosures overlap")
        chosen = roots[best]
        if not chosen.overlaps(z_closed_form(precision)):
            raise PrecisionError("isolated root disagrees with the stored selection")
    return Scalar(chosen, precision)


def classify_root(root: acb, prec: int = 128) -> ZRootSelection:
    """Recover the (y sign, eighth-root index) description of a root ball."""
    with working_precision(prec):
        y = root**8
        sign = 1 if bool(y.imag > 0) else -1
        base = _y_ball(sign).root(8)
        for k in range(8):
            cand = acb(arb(k) / 4).exp_pi_i() * base
            if cand.overlaps(root):
                return ZRootSelection(sign, k)
    raise PrecisionError("root does not match any eighth root of y±")
