"""Asset pipeline: parsing, bond inference vs brute force, mesh math, GLB output."""

import json
import math
import struct
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from molxr import content
from molxr.pdb2asset import (
    EmptyModel,
    MalformedRecord,
    MolecularModel,
    build_builtin_glb,
    build_mesh,
    builtin_names,
    builtin_pdb_path,
    element_info,
    infer_bonds,
    parse_pdb,
    sphere_dims,
    sphere_vertex_count,
    write_glb,
)
from molxr.pdb2asset.cli import main as cli_main
from molxr.pdb2asset.pdbparse import Atom
from molxr.protocol import Vec3
from randgen import make_rng

FIXTURES = Path(__file__).parent / "fixtures"

WATER = builtin_pdb_path("water").read_text()


def brute_force_bonds(model, scale=1.2, min_distance=0.4):
    """Independent all-pairs oracle for the grid-based inference."""
    pairs = set()
    atoms = model.atoms
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            pi, pj = atoms[i].position, atoms[j].position
            d = math.dist((pi.x, pi.y, pi.z), (pj.x, pj.y, pj.z))
            cutoff = scale * (element_info(atoms[i].element).covalent_radius
                              + element_info(atoms[j].element).covalent_radius)
            if min_distance < d <= cutoff:
                pairs.add((i, j))
    return pairs


def test_parse_water():
    model = parse_pdb(WATER)
    assert len(model.atoms) == 3
    assert [a.element for a in model.atoms] == ["O", "H", "H"]
    assert model.atoms[0].position == Vec3(0.0, 0.0, 0.0)
    assert abs(model.atoms[1].position.x - 0.957) < 1e-6


def test_remark_only_is_empty():
    with pytest.raises(EmptyModel):
        parse_pdb("REMARK 1 NOTHING HERE\nREMARK 2 STILL NOTHING\nEND\n")


def test_short_atom_line_malformed():
    with pytest.raises(MalformedRecord):
        parse_pdb("ATOM      1  O   HOH A   1       0.000\n")


def test_atom_count_matches_grep_oracle():
    text = (FIXTURES / "dipeptide.pdb").read_text()
    # independent oracle: count coordinate records in the first model by
    # plain line inspection
    count = 0
    in_later_model = False
    for line in text.splitlines():
        if line.startswith("ENDMDL"):
            in_later_model = True
        if not in_later_model and (line.startswith("ATOM  ") or line.startswith("HETATM")):
            count += 1
    assert count == 11
    model = parse_pdb(text)
    assert len(model.atoms) == count


def test_first_model_only_and_conect():
    model = parse_pdb((FIXTURES / "dipeptide.pdb").read_text())
    assert len(model.atoms) == 11
    # the two waters are linked by CONECT (given twice, stored once)
    o1 = next(i for i, a in enumerate(model.atoms) if a.res_name == "HOH")
    assert sum(1 for b in model.bonds if o1 in b) == 1
    assert len(model.bonds) == 1


def test_element_fallback_heuristic():
    # no element columns: derive from the atom name
    text = ("ATOM      1  CA  GLY A   1       0.000   0.000   0.000\n"
            "HETATM    2 FE   HEM A   2       9.000   0.000   0.000\n")
    model = parse_pdb(text)
    assert model.atoms[0].element == "C"     # alpha carbon, not calcium
    assert model.atoms[1].element == "Fe"


def test_water_bonds_match_brute_force():
    model = infer_bonds(parse_pdb(WATER))
    assert set(model.bonds) == brute_force_bonds(model)
    assert set(model.bonds) == {(0, 1), (0, 2)}   # two O-H, no H-H


def test_distant_atoms_unbonded():
    model = MolecularModel(atoms=[
        Atom(1, "C", Vec3(0, 0, 0)),
        Atom(2, "C", Vec3(10, 0, 0)),
    ])
    assert infer_bonds(model).bonds == []


def test_coincident_atoms_rejected_by_floor():
    model = MolecularModel(atoms=[
        Atom(1, "C", Vec3(0, 0, 0)),
        Atom(2, "C", Vec3(0.1, 0, 0)),
    ])
    assert infer_bonds(model).bonds == []


def test_grid_equals_brute_force_on_random_clouds():
    rng = make_rng(31)
    elements = ["H", "C", "N", "O", "S", "Fe", "Na"]
    for trial in range(20):
        n = 200
        side = rng.uniform(6.0, 20.0)
        model = MolecularModel(atoms=[
            Atom(i + 1, rng.choice(elements),
                 Vec3(rng.uniform(0, side), rng.uniform(0, side), rng.uniform(0, side)))
            for i in range(n)
        ])
        inferred = set(infer_bonds(model).bonds)
        assert inferred == brute_force_bonds(model), f"trial {trial} diverged"


def test_bond_set_order_independent():
    rng = make_rng(7)
    base = infer_bonds(parse_pdb(builtin_pdb_path("benzene").read_text()))
    order = list(range(len(base.atoms)))
    rng.shuffle(order)
    inverse = {old: new for new, old in enumerate(order)}
    shuffled = MolecularModel(atoms=[base.atoms[i] for i in order])
    relabeled = {tuple(sorted((inverse[i], inverse[j]))) for i, j in base.bonds}
    assert set(infer_bonds(shuffled).bonds) == relabeled


def test_single_atom_sphere_vertex_count():
    model = MolecularModel(atoms=[Atom(1, "C", Vec3(0, 0, 0))])
    mesh = build_mesh(model, quality=1)
    # closed form: (rings - 1) * segments + 2 = 3 * 8 + 2
    assert mesh.vertex_count == 26
    assert len(mesh.submeshes) == 1


@pytest.mark.parametrize("quality", [1, 2, 3, 4])
def test_sphere_vertex_count_closed_form(quality):
    segments, rings = sphere_dims(quality)
    assert (segments, rings) == (8 * 2 ** (quality - 1), 4 * 2 ** (quality - 1))
    model = MolecularModel(atoms=[Atom(1, "O", Vec3(0, 0, 0))])
    mesh = build_mesh(model, style="space_filling", quality=quality)
    assert mesh.vertex_count == (rings - 1) * segments + 2 == sphere_vertex_count(quality)


def test_water_submesh_counts():
    model = infer_bonds(parse_pdb(WATER))
    mesh = build_mesh(model, style="ball_and_stick", quality=2)
    spheres = [s for s in mesh.submeshes if s.kind == "sphere"]
    cylinders = [s for s in mesh.submeshes if s.kind == "cylinder"]
    # atoms + 2 half-cylinders per bond (two-color bonds)
    assert len(spheres) == 3
    assert len(cylinders) == 2 * len(model.bonds) == 4
    assert len(mesh.submeshes) == 3 + 2 * 2


def test_space_filling_has_no_cylinders():
    model = infer_bonds(parse_pdb(WATER))
    mesh = build_mesh(model, style="space_filling", quality=1)
    assert all(s.kind == "sphere" for s in mesh.submeshes)
    assert len(mesh.submeshes) == 3


def test_normals_unit_length():
    model = infer_bonds(parse_pdb(builtin_pdb_path("ethanol").read_text()))
    for style in ("ball_and_stick", "space_filling"):
        mesh = build_mesh(model, style=style, quality=2)
        lengths = np.linalg.norm(mesh.normals.astype(np.float64), axis=1)
        assert np.max(np.abs(lengths - 1.0)) <= 1e-3


def test_sphere_geometric_fidelity():
    radius = element_info("C").vdw_radius
    model = MolecularModel(atoms=[Atom(1, "C", Vec3(1.0, 2.0, 3.0))])
    mesh = build_mesh(model, style="space_filling", quality=4)
    center = np.array([1.0, 2.0, 3.0])
    dist = np.linalg.norm(mesh.positions.astype(np.float64) - center, axis=1)
    assert np.max(np.abs(dist - radius)) <= 1e-5 * radius


def test_submeshes_reference_exactly_their_vertices():
    model = infer_bonds(parse_pdb(builtin_pdb_path("co2").read_text()))
    mesh = build_mesh(model, quality=1)
    assert int(mesh.indices.max()) < mesh.vertex_count
    assert len(mesh.indices) % 3 == 0
    for sub in mesh.submeshes:
        idx = mesh.indices[sub.index_start:sub.index_start + sub.index_count]
        used = set(int(v) for v in idx)
        expected = set(range(sub.vertex_start, sub.vertex_start + sub.vertex_count))
        assert used == expected, f"{sub.kind} submesh has unreferenced or foreign vertices"


def test_triangles_face_outward():
    model = MolecularModel(atoms=[Atom(1, "C", Vec3(0, 0, 0))])
    mesh = build_mesh(model, style="space_filling", quality=2)
    pos = mesh.positions.astype(np.float64)
    tris = mesh.indices.reshape(-1, 3)
    a, b, c = pos[tris[:, 0]], pos[tris[:, 1]], pos[tris[:, 2]]
    face_normal = np.cross(b - a, c - a)
    centroid = (a + b + c) / 3.0
    # CCW winding with outward normals: every face normal points away
    # from the sphere center
    assert np.all(np.einsum("ij,ij->i", face_normal, centroid) > 0)


def test_glb_header_constants():
    data = build_builtin_glb("water", quality=1)
    assert data[0:4] == b"glTF"
    assert struct.unpack_from("<I", data, 0)[0] == 0x46546C67
    assert struct.unpack_from("<I", data, 4)[0] == 2
    assert struct.unpack_from("<I", data, 8)[0] == len(data)


def test_glb_passes_container_validation():
    for name in sorted(builtin_names()):
        header = content.validate_asset(build_builtin_glb(name, quality=1))
        assert header.version == 2
        assert header.chunks[0].type == content.CHUNK_JSON


def _parse_glb(data):
    header = content.validate_asset(data)
    c0, c1 = header.chunks[0], header.chunks[1]
    meta = json.loads(data[c0.offset:c0.offset + c0.length])
    binary = data[c1.offset:c1.offset + c1.length]
    return meta, binary


def test_glb_bbox_diagonal_normalized_to_one_meter():
    for name in ("water", "nacl", "benzene"):
        data = build_builtin_glb(name, quality=2)
        meta, binary = _parse_glb(data)
        node = meta["nodes"][0]
        acc = meta["accessors"][0]
        view = meta["bufferViews"][acc["bufferView"]]
        count = acc["count"]
        pos = np.frombuffer(binary, dtype="<f4",
                            count=count * 3, offset=view["byteOffset"]).reshape(-1, 3)
        diagonal = float(np.linalg.norm(pos.max(axis=0).astype(np.float64)
                                        - pos.min(axis=0).astype(np.float64)))
        assert abs(diagonal * node["scale"][0] - 1.0) <= 1e-6


def test_glb_one_material_per_color():
    model = infer_bonds(parse_pdb(WATER))
    mesh = build_mesh(model, quality=1)
    meta, _ = _parse_glb(write_glb(mesh, "water"))
    # O and H only: two distinct materials despite 7 primitives
    assert len(meta["materials"]) == 2
    assert len(meta["meshes"][0]["primitives"]) == 7
    colors = {tuple(m["pbrMetallicRoughness"]["baseColorFactor"]) for m in meta["materials"]}
    assert len(colors) == 2


def test_glb_index_accessors_aligned():
    meta, _ = _parse_glb(build_builtin_glb("benzene", quality=1))
    for acc in meta["accessors"][2:]:
        assert acc.get("byteOffset", 0) % 4 == 0


def test_cli_end_to_end(tmp_path):
    out = tmp_path / "water.glb"
    code = cli_main(["--in", str(builtin_pdb_path("water")), "--out", str(out)])
    assert code == 0
    content.validate_asset(out.read_bytes())


def test_cli_missing_input(tmp_path, capsys):
    code = cli_main(["--in", str(tmp_path / "absent.pdb"), "--out", str(tmp_path / "x.glb")])
    assert code == 1
    assert "absent.pdb" in capsys.readouterr().err


def test_cli_bad_quality(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["--in", "x.pdb", "--out", "y.glb", "--quality", "9"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_cli_unwritable_output(tmp_path):
    code = cli_main(["--in", str(builtin_pdb_path("water")),
                     "--out", str(tmp_path / "nosuchdir" / "x.glb")])
    assert code == 3


def test_cli_installed_entry_point(tmp_path):
    out = tmp_path / "methane.glb"
    proc = subprocess.run(
        [sys.executable, "-m", "molxr.pdb2asset.cli",
         "--in", str(builtin_pdb_path("methane")), "--out", str(out),
         "--style", "space_filling", "--quality", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    content.validate_asset(out.read_bytes())
