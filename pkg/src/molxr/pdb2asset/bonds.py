"""Distance-based bond inference with a uniform spatial grid.

Atoms i and j bond when their distance is within 1.2x the sum of their
covalent radii and beyond a 0.4 A floor (which rejects coincident-atom
artifacts). The grid cell edge equals the largest possible cutoff, so
any bonded pair falls in adjacent cells and the search is near-linear.
Explicit bonds already on the model (CONECT records) are preserved.
"""

from __future__ import annotations

import math
from collections import defaultdict

from .elements import element_info, max_covalent_radius
from .pdbparse import MolecularModel

BOND_SCALE = 1.2
MIN_BOND_DISTANCE = 0.4


def infer_bonds(model: MolecularModel, scale: float = BOND_SCALE,
                min_distance: float = MIN_BOND_DISTANCE) -> MolecularModel:
    """Add distance-inferred bonds to the model in place; returns it."""
    atoms = model.atoms
    if len(atoms) < 2:
        return model
    radii = [element_info(a.element).covalent_radius for a in atoms]
    cell = scale * 2.0 * max_covalent_radius(model.elements)
    grid: dict[tuple, list] = defaultdict(list)

    def key(pos):
        return (math.floor(pos.x / cell), math.floor(pos.y / cell), math.floor(pos.z / cell))

    for i, atom in enumerate(atoms):
        grid[key(atom.position)].append(i)

    min_sq = min_distance * min_distance
    for (cx, cy, cz), members in list(grid.items()):
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    neighbors = grid.get((cx + dx, cy + dy, cz + dz))
                    if not neighbors:
                        continue
                    for i in members:
                        pi = atoms[i].position
                        for j in neighbors:
                            if j <= i:
                                continue
                            pj = atoms[j].position
                            d_sq = ((pi.x - pj.x) ** 2 + (pi.y - pj.y) ** 2
                                    + (pi.z - pj.z) ** 2)
                            cutoff = scale * (radii[i] + radii[j])
                            if min_sq < d_sq <= cutoff * cutoff:
                                model.add_bond(i, j)
    model.bonds.sort()
    return model
