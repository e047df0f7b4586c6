"""Every exponent used by the bounds, stored exactly.

Thresholds at desk scale are parameters: n**(1/41) is close to 1 for any
set we can count, so callers override these freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

CONSTANTS_VERSION = "1"


@dataclass(frozen=True)
class Exponent:
    name: str
    value: Fraction
    role: str

    def __float__(self):
        return float(self.value)


_ROWS = [
    ("rect_exponent", "99/41", "rectangle count exponent, improved bound"),
    ("corner_exponent", "17/7", "corner/rectangle count exponent, previous bound"),
    ("trivial_exponent", "5/2", "optimal count with no size restriction (full plane)"),
    ("grid_side", "17/41", "side length of decomposition grids, also threshold t1"),
    ("grid_count", "7/41", "number of grids per level, up to 2^i"),
    ("grid_mass", "34/41", "points per selected grid, up to 2^-i"),
    ("density_floor", "1/41", "density loss exponent; level count and A' floor"),
    ("rich_threshold", "6/11", "threshold t2 above which the crude rich-line bound is used"),
    ("sdz_incidence", "11/15", "point-line incidence exponent"),
    ("rich_n", "11/4", "rich-line bound, power of n"),
    ("rich_k", "15/4", "rich-line bound, power of 1/k"),
    ("rich_crude_n", "5/4", "crude rich-line bound, second term power of n"),
    ("rich_strong_n", "13/2", "strong rich-line bound, third term power of n"),
    ("rich_strong_p", "15/2", "strong rich-line bound, third term power of 1/p"),
    ("product_a", "3/4", "Cartesian-product incidence bound, power of |A| and |L|"),
    ("product_b", "1/2", "Cartesian-product incidence bound, power of |B|"),
    ("size_limit", "26/21", "size hypothesis |A| <= p^(26/21); slice threshold"),
    ("stein_tomas_cut", "94/53", "|G| below p^(94/53): Stein-Tomas regime"),
    ("holder_cut", "47/21", "|G| above p^(47/21): Cauchy-Schwarz/Hoelder regime"),
    ("level_set_target", "135/188", "level-set restriction exponent"),
    ("restriction_range", "188/53", "extension operator L2 -> Lr for r above this"),
    ("restriction_previous", "32/9", "previous restriction range"),
    ("restriction_conjectural", "10/3", "range implied by an n^(2+eps) rectangle bound"),
    ("cs_slice", "5/8", "power of slice size under the Cauchy-Schwarz energy bound"),
    ("holder_g", "11/16", "Hoelder regime, power of |G|"),
    ("holder_p", "1/16", "Hoelder regime, power of p"),
    ("slice_degenerate", "269/376", "slice-degenerate regime exponent"),
    ("energy_route_p", "3/41", "energy route, power of p"),
    ("energy_route_g", "111/164", "energy route, power of |G|"),
    ("slice_energy", "99/164", "L4 norm exponent of a slice via the rectangle bound"),
    ("mt_support", "3/8", "support power in the level-set machine"),
    ("extractor_threshold", "37/16", "rectangle exponent that beats rate 4/9"),
    ("extractor_best", "4/9", "best known extractor min-entropy rate"),
    ("extractor_new", "123/260", "extractor min-entropy rate from the improved bound"),
]

EXPONENTS: dict[str, Exponent] = {
    name: Exponent(name, Fraction(v), role) for name, v, role in _ROWS
}


def exponent(name: str) -> Fraction:
    return EXPONENTS[name].value


def as_table() -> list[dict]:
    return [
        {"name": e.name, "value": str(e.value), "float": float(e.value), "role": e.role}
        for e in EXPONENTS.values()
    ]
