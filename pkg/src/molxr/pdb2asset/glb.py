"""Single-buffer GLB 2.0 writer.

Layout: 12-byte header, JSON metadata chunk (space-padded to 4 bytes),
one binary chunk holding positions, normals, and indices in 4-byte-
aligned views. Each submesh becomes a primitive with its own index
accessor and a shared material per color. The root node is scaled so
the model's bounding-box diagonal is exactly one meter: rooms are
human-scale and assets should drop in at a sensible size.
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np

from .mesh import Mesh

GLB_MAGIC = 0x46546C67
CHUNK_JSON = 0x4E4F534A
CHUNK_BIN = 0x004E4942

COMPONENT_F32 = 5126
COMPONENT_U32 = 5125
TARGET_ARRAY_BUFFER = 34962
TARGET_ELEMENT_ARRAY = 34963

MAX_VERTICES = 2 ** 24


class MeshTooLarge(Exception):
    pass


def _pad(data: bytes, pad_byte: bytes) -> bytes:
    remainder = len(data) % 4
    return data if remainder == 0 else data + pad_byte * (4 - remainder)


def write_glb(mesh: Mesh, label: str = "model") -> bytes:
    """Serialize a mesh to GLB bytes; raises MeshTooLarge past 2^24 vertices."""
    if mesh.vertex_count > MAX_VERTICES:
        raise MeshTooLarge(f"{mesh.vertex_count} vertices exceed the 2^24 cap")

    positions = np.ascontiguousarray(mesh.positions, dtype="<f4")
    normals = np.ascontiguousarray(mesh.normals, dtype="<f4")
    indices = np.ascontiguousarray(mesh.indices, dtype="<u4")

    pos_bytes = positions.tobytes()
    norm_bytes = normals.tobytes()
    idx_bytes = indices.tobytes()
    # f32/u32 payloads are 4-byte multiples already; offsets stay aligned
    binary = pos_bytes + norm_bytes + idx_bytes

    mins = positions.min(axis=0)
    maxs = positions.max(axis=0)
    diagonal = float(np.linalg.norm(maxs - mins))
    scale = 1.0 / diagonal if diagonal > 0.0 else 1.0

    materials = []
    material_index = {}
    for sub in mesh.submeshes:
        if sub.color not in material_index:
            material_index[sub.color] = len(materials)
            materials.append({
                "name": f"color-{len(materials)}",
                "pbrMetallicRoughness": {
                    "baseColorFactor": [round(c, 6) for c in sub.color],
                    "metallicFactor": 0.0,
                    "roughnessFactor": 0.6,
                },
            })

    buffer_views = [
        {"buffer": 0, "byteOffset": 0, "byteLength": len(pos_bytes),
         "target": TARGET_ARRAY_BUFFER},
        {"buffer": 0, "byteOffset": len(pos_bytes), "byteLength": len(norm_bytes),
         "target": TARGET_ARRAY_BUFFER},
        {"buffer": 0, "byteOffset": len(pos_bytes) + len(norm_bytes),
         "byteLength": len(idx_bytes), "target": TARGET_ELEMENT_ARRAY},
    ]
    accessors = [
        {"bufferView": 0, "componentType": COMPONENT_F32, "count": mesh.vertex_count,
         "type": "VEC3", "min": [float(v) for v in mins], "max": [float(v) for v in maxs]},
        {"bufferView": 1, "componentType": COMPONENT_F32, "count": mesh.vertex_count,
         "type": "VEC3"},
    ]
    primitives = []
    for sub in mesh.submeshes:
        accessors.append({
            "bufferView": 2,
            "byteOffset": sub.index_start * 4,
            "componentType": COMPONENT_U32,
            "count": sub.index_count,
            "type": "SCALAR",
        })
        primitives.append({
            "attributes": {"POSITION": 0, "NORMAL": 1},
            "indices": len(accessors) - 1,
            "material": material_index[sub.color],
            "mode": 4,
        })

    gltf = {
        "asset": {"version": "2.0", "generator": "pdb2asset"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"name": label, "mesh": 0, "scale": [scale, scale, scale]}],
        "meshes": [{"name": label, "primitives": primitives}],
        "materials": materials,
        "buffers": [{"byteLength": len(binary)}],
        "bufferViews": buffer_views,
        "accessors": accessors,
    }

    json_chunk = _pad(json.dumps(gltf, separators=(",", ":")).encode("utf-8"), b" ")
    bin_chunk = _pad(binary, b"\x00")
    total = 12 + 8 + len(json_chunk) + 8 + len(bin_chunk)
    out = bytearray()
    out += struct.pack("<III", GLB_MAGIC, 2, total)
    out += struct.pack("<II", len(json_chunk), CHUNK_JSON)
    out += json_chunk
    out += struct.pack("<II", len(bin_chunk), CHUNK_BIN)
    out += bin_chunk
    return bytes(out)
