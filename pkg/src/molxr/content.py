"""Preset-room manifests, GLB container checks, and the asset store.

The manifest is a versioned JSON file:

    {
      "version": 1,
      "presets": [
        {
          "preset_id": "demo",
          "title": "Demo",
          "objects": [
            {
              "asset_url": "builtin:water",
              "label": "water",
              "transform": {"position": [0, 1.4, -2], "orientation": [0, 0, 0, 1], "scale": 1},
              "grabbable": true
            }
          ]
        }
      ]
    }

asset_url accepts http(s) URLs (fetched directly by clients), /assets/
store paths, paths relative to the manifest file, and "builtin:<name>"
references that the server materializes from bundled structures at
startup. Uploaded assets are content-addressed: identical bytes always
map to the same URL.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .protocol import Transform

GLB_MAGIC = 0x46546C67       # "glTF"
GLB_VERSION = 2
CHUNK_JSON = 0x4E4F534A      # "JSON"
CHUNK_BIN = 0x004E4942       # "BIN\0"
MAX_ASSET_BYTES = 64 * 1024 * 1024

_HEADER = struct.Struct("<III")
_CHUNK_HEADER = struct.Struct("<II")

_HASH_URL = re.compile(r"^/assets/([0-9a-f]{64})\.glb$")


class ContentError(Exception):
    pass


class BadManifest(ContentError):
    pass


class DuplicatePreset(ContentError):
    pass


class GlbValidationError(ContentError):
    pass


class BadMagic(GlbValidationError):
    pass


class BadVersion(GlbValidationError):
    pass


class TruncatedChunk(GlbValidationError):
    pass


class OversizeAsset(GlbValidationError):
    pass


class BadMetadata(GlbValidationError):
    pass


class StorageFull(ContentError):
    pass


# ---------------------------------------------------------------------------
# GLB container validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlbChunk:
    length: int
    type: int
    offset: int


@dataclass(frozen=True)
class GlbHeader:
    magic: int
    version: int
    length: int
    chunks: tuple


def validate_asset(data: bytes, max_bytes: int = MAX_ASSET_BYTES) -> GlbHeader:
    """Parse and check a GLB 2.0 container; returns its header layout.

    Checks: magic, version 2, declared length equals actual, chunk table
    walks exactly to the end, first chunk is the JSON metadata chunk and
    parses, total size under the cap.
    """
    if len(data) > max_bytes:
        raise OversizeAsset(f"asset is {len(data)} bytes, cap {max_bytes}")
    if len(data) < _HEADER.size:
        raise TruncatedChunk(f"container shorter than header: {len(data)} bytes")
    magic, version, length = _HEADER.unpack_from(data, 0)
    if magic != GLB_MAGIC:
        raise BadMagic(f"magic 0x{magic:08X}, expected 0x{GLB_MAGIC:08X}")
    if version != GLB_VERSION:
        raise BadVersion(f"container version {version}, expected {GLB_VERSION}")
    if length != len(data):
        raise TruncatedChunk(f"declared length {length} != actual {len(data)}")
    chunks = []
    offset = _HEADER.size
    while offset < length:
        if offset + _CHUNK_HEADER.size > length:
            raise TruncatedChunk(f"chunk header truncated at offset {offset}")
        chunk_len, chunk_type = _CHUNK_HEADER.unpack_from(data, offset)
        payload_start = offset + _CHUNK_HEADER.size
        if payload_start + chunk_len > length:
            raise TruncatedChunk(
                f"chunk at {offset} declares {chunk_len} bytes past the end")
        chunks.append(GlbChunk(chunk_len, chunk_type, payload_start))
        offset = payload_start + chunk_len
    if not chunks or chunks[0].type != CHUNK_JSON:
        raise BadMetadata("first chunk is not the JSON metadata chunk")
    c0 = chunks[0]
    try:
        meta = json.loads(data[c0.offset:c0.offset + c0.length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BadMetadata(f"metadata chunk unparseable: {exc}") from None
    if not isinstance(meta, dict) or "asset" not in meta:
        raise BadMetadata("metadata chunk missing asset descriptor")
    return GlbHeader(magic, version, length, tuple(chunks))


# ---------------------------------------------------------------------------
# Preset manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PresetObject:
    asset_url: str
    label: str
    transform: Transform
    grabbable: bool = True


@dataclass(frozen=True)
class PresetRoom:
    preset_id: str
    title: str
    objects: tuple


@dataclass
class Manifest:
    version: int
    presets: list
    warnings: list = field(default_factory=list)

    def preset(self, preset_id: str) -> Optional[PresetRoom]:
        for p in self.presets:
            if p.preset_id == preset_id:
                return p
        return None

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "presets": [
                {
                    "preset_id": p.preset_id,
                    "title": p.title,
                    "objects": [
                        {
                            "asset_url": o.asset_url,
                            "label": o.label,
                            "transform": o.transform.to_json(),
                            "grabbable": o.grabbable,
                        }
                        for o in p.objects
                    ],
                }
                for p in self.presets
            ],
        }


def builtin_names() -> set:
    from . import pdb2asset
    return pdb2asset.builtin_names()


def _check_resolvable(url: str, base_dir: Path, builtins: set) -> Optional[str]:
    if url.startswith("builtin:"):
        name = url.split(":", 1)[1]
        if name not in builtins:
            return f"unknown builtin asset {name!r}"
        return None
    if url.startswith("http://") or url.startswith("https://"):
        return None
    if url.startswith("/assets/"):
        return None
    if (base_dir / url).is_file():
        return None
    return f"asset file not found: {url}"


def parse_manifest(text: str, base_dir: Path = Path(".")) -> Manifest:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadManifest(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or not isinstance(obj.get("version"), int):
        raise BadManifest("manifest must be an object with an integer version")
    if obj["version"] != 1:
        raise BadManifest(f"unsupported manifest version {obj['version']}")
    raw_presets = obj.get("presets")
    if not isinstance(raw_presets, list):
        raise BadManifest("manifest.presets must be a list")
    builtins = builtin_names()
    manifest = Manifest(version=1, presets=[])
    seen = set()
    for entry in raw_presets:
        try:
            preset_id = entry["preset_id"]
            title = entry["title"]
            raw_objects = entry.get("objects", [])
            objects = tuple(
                PresetObject(
                    asset_url=o["asset_url"],
                    label=o["label"],
                    transform=Transform.from_json(o["transform"]),
                    grabbable=bool(o.get("grabbable", True)),
                )
                for o in raw_objects
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadManifest(f"malformed preset entry: {exc}") from None
        if preset_id in seen:
            raise DuplicatePreset(f"preset_id {preset_id!r} appears twice")
        seen.add(preset_id)
        for o in objects:
            problem = _check_resolvable(o.asset_url, base_dir, builtins)
            if problem:
                manifest.warnings.append(f"{preset_id}: {problem}")
        manifest.presets.append(PresetRoom(preset_id, title, objects))
    return manifest


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        raise BadManifest(f"cannot read manifest {path}: {exc}") from None
    return parse_manifest(text, base_dir=path.parent)


def starter_manifest_path() -> Path:
    return Path(__file__).parent / "data" / "starter_manifest.json"


# ---------------------------------------------------------------------------
# Asset store
# ---------------------------------------------------------------------------


class AssetStore:
    """Content-addressed on-disk GLB store.

    Identical bytes store to identical URLs; writes are atomic
    (temp file + rename), so concurrent readers never see partial
    assets.
    """

    def __init__(self, root, max_total_bytes: Optional[int] = None,
                 max_asset_bytes: int = MAX_ASSET_BYTES):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.max_total_bytes = max_total_bytes
        self.max_asset_bytes = max_asset_bytes

    def _path(self, digest: str) -> Path:
        return self.root / f"{digest}.glb"

    def total_bytes(self) -> int:
        return sum(p.stat().st_size for p in self.root.glob("*.glb"))

    def store(self, data: bytes) -> str:
        """Validate and persist; returns the serving URL."""
        validate_asset(data, max_bytes=self.max_asset_bytes)
        digest = hashlib.sha256(data).hexdigest()
        path = self._path(digest)
        if path.exists():
            return f"/assets/{digest}.glb"
        if self.max_total_bytes is not None and self.total_bytes() + len(data) > self.max_total_bytes:
            raise StorageFull(f"store would exceed {self.max_total_bytes} bytes")
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return f"/assets/{digest}.glb"

    def digest_for(self, name_or_url: str) -> Optional[str]:
        m = _HASH_URL.match(name_or_url)
        if m:
            return m.group(1)
        if re.fullmatch(r"[0-9a-f]{64}(\.glb)?", name_or_url):
            return name_or_url.removesuffix(".glb")
        return None

    def has(self, name_or_url: str) -> bool:
        digest = self.digest_for(name_or_url)
        return digest is not None and self._path(digest).is_file()

    def fetch(self, name_or_url: str) -> bytes:
        digest = self.digest_for(name_or_url)
        if digest is None or not self._path(digest).is_file():
            raise FileNotFoundError(f"no stored asset for {name_or_url!r}")
        return self._path(digest).read_bytes()

    def asset_url_validator(self):
        """Session-facing check: store URLs must exist, web URLs pass
        through (clients fetch those directly), everything else fails."""
        def validate(url: str) -> bool:
            if url.startswith("/assets/"):
                return self.has(url)
            return url.startswith("http://") or url.startswith("https://")
        return validate


def resolve_builtin_assets(manifest: Manifest, store: AssetStore,
                           quality: int = 2) -> Manifest:
    """Materialize every builtin:<name> reference into the store and
    rewrite the manifest to the stored URLs."""
    from . import pdb2asset
    cache: dict[str, str] = {}
    presets = []
    for preset in manifest.presets:
        objects = []
        for obj in preset.objects:
            url = obj.asset_url
            if url.startswith("builtin:"):
                name = url.split(":", 1)[1]
                if name not in cache:
                    cache[name] = store.store(pdb2asset.build_builtin_glb(name, quality=quality))
                url = cache[name]
            objects.append(PresetObject(url, obj.label, obj.transform, obj.grabbable))
        presets.append(PresetRoom(preset.preset_id, preset.title, tuple(objects)))
    return Manifest(version=manifest.version, presets=presets, warnings=list(manifest.warnings))
