"""Embedded periodic table: covalent radii, van-der-Waals radii, CPK colors.

Covalent radii follow the widely used Cordero set, vdW radii the Bondi
set (Batsanov values where Bondi has none), colors the conventional CPK
scheme. Unrecognized element symbols map to the default entry.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class ElementInfo:
    symbol: str
    covalent_radius: float   # Angstrom
    vdw_radius: float        # Angstrom
    color: tuple             # RGBA, 0..1


def _rgb(hexcode: str) -> tuple:
    return (int(hexcode[0:2], 16) / 255.0,
            int(hexcode[2:4], 16) / 255.0,
            int(hexcode[4:6], 16) / 255.0,
            1.0)


_TABLE = {
    "H":  (0.31, 1.20, "FFFFFF"),
    "He": (0.28, 1.40, "D9FFFF"),
    "Li": (1.28, 1.82, "CC80FF"),
    "Be": (0.96, 1.53, "C2FF00"),
    "B":  (0.84, 1.92, "FFB5B5"),
    "C":  (0.76, 1.70, "909090"),
    "N":  (0.71, 1.55, "3050F8"),
    "O":  (0.66, 1.52, "FF0D0D"),
    "F":  (0.57, 1.47, "90E050"),
    "Ne": (0.58, 1.54, "B3E3F5"),
    "Na": (1.66, 2.27, "AB5CF2"),
    "Mg": (1.41, 1.73, "8AFF00"),
    "Al": (1.21, 1.84, "BFA6A6"),
    "Si": (1.11, 2.10, "F0C8A0"),
    "P":  (1.07, 1.80, "FF8000"),
    "S":  (1.05, 1.80, "FFFF30"),
    "Cl": (1.02, 1.75, "1FF01F"),
    "Ar": (1.06, 1.88, "80D1E3"),
    "K":  (2.03, 2.75, "8F40D4"),
    "Ca": (1.76, 2.31, "3DFF00"),
    "Ti": (1.60, 2.11, "BFC2C7"),
    "Cr": (1.39, 2.06, "8A99C7"),
    "Mn": (1.39, 2.05, "9C7AC7"),
    "Fe": (1.32, 2.04, "E06633"),
    "Co": (1.26, 2.00, "F090A0"),
    "Ni": (1.24, 1.63, "50D050"),
    "Cu": (1.32, 1.40, "C88033"),
    "Zn": (1.22, 1.39, "7D80B0"),
    "Se": (1.20, 1.90, "FFA100"),
    "Br": (1.20, 1.85, "A62929"),
    "I":  (1.39, 1.98, "940094"),
}

DEFAULT_ELEMENT = ElementInfo("X", 1.50, 2.00, _rgb("FF1493"))

ELEMENTS = {
    symbol: ElementInfo(symbol, cov, vdw, _rgb(color))
    for symbol, (cov, vdw, color) in _TABLE.items()
}


def element_info(symbol: str) -> ElementInfo:
    return ELEMENTS.get(normalize_symbol(symbol), DEFAULT_ELEMENT)


def normalize_symbol(symbol: str) -> str:
    return symbol.strip().capitalize()


def is_known(symbol: str) -> bool:
    return normalize_symbol(symbol) in ELEMENTS


def max_covalent_radius(symbols) -> float:
    radii = [element_info(s).covalent_radius for s in symbols]
    return max(radii) if radii else DEFAULT_ELEMENT.covalent_radius
