"""Fixed-column PDB reader: ATOM/HETATM coordinates plus CONECT bonds.

Only the first model of a multi-model file is read. Records other than
ATOM, HETATM, CONECT, MODEL and ENDMDL are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..protocol import Vec3
from .elements import ELEMENTS, normalize_symbol


class PdbError(Exception):
    pass


class EmptyModel(PdbError):
    """The file contains no ATOM/HETATM records."""


class MalformedRecord(PdbError):
    """An ATOM/HETATM line is too short to carry coordinates."""


@dataclass
class Atom:
    serial: int
    element: str
    position: Vec3
    name: str = ""
    res_name: str = ""
    chain_id: str = ""
    res_seq: int = 0
    hetero: bool = False


@dataclass
class MolecularModel:
    atoms: list = field(default_factory=list)
    bonds: list = field(default_factory=list)   # sorted (i, j) index pairs, i < j

    def add_bond(self, i: int, j: int) -> bool:
        """Add a deduplicated, non-self bond; returns True if added."""
        if i == j:
            return False
        pair = (i, j) if i < j else (j, i)
        if pair in self._bond_set:
            return False
        self._bond_set.add(pair)
        self.bonds.append(pair)
        return True

    def __post_init__(self):
        self._bond_set = set(self.bonds)

    @property
    def elements(self) -> set:
        return {a.element for a in self.atoms}


def _guess_element(name_field: str) -> str:
    """Element from the atom-name columns when columns 77-78 are blank.

    Two leading letters that form a known symbol win when the name is
    left-justified into column 13 (the convention for two-letter
    elements, e.g. ``FE``); otherwise the first letter is the element
    (handles ``CA`` the alpha-carbon vs ``CA `` the calcium case).
    """
    stripped = name_field.strip(" 0123456789'\"*")
    if not stripped:
        return "X"
    two = normalize_symbol(stripped[:2])
    if len(stripped) >= 2 and not name_field.startswith(" ") and two in ELEMENTS and two not in ("C", "N", "O", "H", "P", "S"):
        return two
    return normalize_symbol(stripped[0])


def parse_pdb(data) -> MolecularModel:
    """Parse PDB text (str or bytes) into atoms plus explicit bonds."""
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    model = MolecularModel()
    serial_to_index: dict[int, int] = {}
    conect_pairs: list[tuple[int, int]] = []
    ended = False
    for lineno, line in enumerate(data.splitlines(), start=1):
        record = line[:6]
        if record in ("ATOM  ", "HETATM"):
            if ended:
                continue   # later models: first model only
            if len(line) < 54:
                raise MalformedRecord(
                    f"line {lineno}: {record.strip()} record shorter than coordinate columns")
            try:
                serial = int(line[6:11])
                x = float(line[30:38])
                y = float(line[38:46])
                z = float(line[46:54])
                res_seq = int(line[22:26]) if line[22:26].strip() else 0
            except ValueError as exc:
                raise MalformedRecord(f"line {lineno}: {exc}") from None
            element = line[76:78].strip() if len(line) >= 78 else ""
            if element:
                element = normalize_symbol(element)
            else:
                element = _guess_element(line[12:16])
            atom = Atom(
                serial=serial,
                element=element,
                position=Vec3(x, y, z),
                name=line[12:16].strip(),
                res_name=line[17:20].strip(),
                chain_id=line[21:22].strip(),
                res_seq=res_seq,
                hetero=record == "HETATM",
            )
            serial_to_index.setdefault(serial, len(model.atoms))
            model.atoms.append(atom)
        elif record == "CONECT":
            fields = [line[start:start + 5] for start in (6, 11, 16, 21, 26)]
            serials = []
            for f in fields:
                f = f.strip()
                if f:
                    try:
                        serials.append(int(f))
                    except ValueError:
                        pass
            if len(serials) >= 2:
                base = serials[0]
                for other in serials[1:]:
                    conect_pairs.append((base, other))
        elif record.startswith("ENDMDL") and model.atoms:
            ended = True
    if not model.atoms:
        raise EmptyModel("no ATOM/HETATM records found")
    for a, b in conect_pairs:
        if a in serial_to_index and b in serial_to_index:
            model.add_bond(serial_to_index[a], serial_to_index[b])
    return model
