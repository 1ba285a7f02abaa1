"""PDB-to-GLB asset pipeline: parse structures, infer bonds, mesh, export.

Usable as a library or through the ``pdb2asset`` command line tool. A
handful of small bundled structures double as placeholder room content
("builtin:<name>" manifest references).
"""

from pathlib import Path

from .bonds import infer_bonds
from .elements import element_info
from .glb import MeshTooLarge, write_glb
from .mesh import Mesh, Submesh, build_mesh, sphere_dims, sphere_vertex_count
from .pdbparse import Atom, EmptyModel, MalformedRecord, MolecularModel, PdbError, parse_pdb

__all__ = [
    "Atom", "EmptyModel", "MalformedRecord", "Mesh", "MeshTooLarge",
    "MolecularModel", "PdbError", "Submesh", "build_builtin_glb", "build_mesh",
    "builtin_names", "builtin_pdb_path", "element_info", "infer_bonds",
    "parse_pdb", "sphere_dims", "sphere_vertex_count", "write_glb",
]

_PDB_DIR = Path(__file__).parent.parent / "data" / "pdb"


def builtin_names() -> set:
    return {p.stem for p in _PDB_DIR.glob("*.pdb")}


def builtin_pdb_path(name: str) -> Path:
    path = _PDB_DIR / f"{name}.pdb"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled structure named {name!r}")
    return path


def build_builtin_glb(name: str, style: str = "ball_and_stick", quality: int = 2) -> bytes:
    """GLB bytes for one bundled structure."""
    model = infer_bonds(parse_pdb(builtin_pdb_path(name).read_text("utf-8")))
    return write_glb(build_mesh(model, style=style, quality=quality), label=name)
