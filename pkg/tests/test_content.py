"""Manifest parsing, GLB container checks, and the content-addressed store."""

import json
import struct

import pytest

from molxr import content
from molxr.pdb2asset import build_builtin_glb


def make_glb():
    return build_builtin_glb("water", quality=1)


def test_starter_manifest_eight_presets():
    manifest = content.load_manifest(content.starter_manifest_path())
    assert [p.preset_id for p in manifest.presets] == [
        "empty", "symmetry", "orbitals", "isomerism", "materials",
        "macromolecules", "cryo-tomography", "demo"]
    assert manifest.presets[0].objects == ()
    assert manifest.warnings == []


def test_duplicate_preset_rejected():
    doc = {"version": 1, "presets": [
        {"preset_id": "a", "title": "A", "objects": []},
        {"preset_id": "a", "title": "A again", "objects": []},
    ]}
    with pytest.raises(content.DuplicatePreset):
        content.parse_manifest(json.dumps(doc))


def test_empty_file_is_bad_manifest(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("")
    with pytest.raises(content.BadManifest):
        content.load_manifest(path)


def test_missing_file_is_bad_manifest(tmp_path):
    with pytest.raises(content.BadManifest):
        content.load_manifest(tmp_path / "nope.json")


def test_bad_shapes_rejected():
    for doc in ("[]", '{"version": "x"}', '{"version": 2, "presets": []}',
                '{"version": 1, "presets": 5}',
                '{"version": 1, "presets": [{"preset_id": "a"}]}'):
        with pytest.raises(content.BadManifest):
            content.parse_manifest(doc)


def test_unresolvable_assets_flagged(tmp_path):
    doc = {"version": 1, "presets": [{
        "preset_id": "p", "title": "P", "objects": [
            {"asset_url": "builtin:unobtainium", "label": "x",
             "transform": {"position": [0, 0, 0], "orientation": [0, 0, 0, 1], "scale": 1}},
            {"asset_url": "missing/file.glb", "label": "y",
             "transform": {"position": [0, 0, 0], "orientation": [0, 0, 0, 1], "scale": 1}},
            {"asset_url": "https://example.org/fine.glb", "label": "z",
             "transform": {"position": [0, 0, 0], "orientation": [0, 0, 0, 1], "scale": 1}},
        ]}]}
    manifest = content.parse_manifest(json.dumps(doc), base_dir=tmp_path)
    assert len(manifest.warnings) == 2
    assert any("unobtainium" in w for w in manifest.warnings)
    assert any("missing/file.glb" in w for w in manifest.warnings)


def test_manifest_round_trip():
    manifest = content.load_manifest(content.starter_manifest_path())
    again = content.parse_manifest(json.dumps(manifest.to_json()),
                                   base_dir=content.starter_manifest_path().parent)
    assert again.presets == manifest.presets


def test_validate_asset_accepts_pipeline_output():
    header = content.validate_asset(make_glb())
    assert header.magic == content.GLB_MAGIC
    assert header.version == 2
    assert len(header.chunks) == 2
    assert header.chunks[0].type == content.CHUNK_JSON
    assert header.chunks[1].type == content.CHUNK_BIN


def test_bad_magic():
    data = b"\x00\x00\x00\x00" + make_glb()[4:]
    with pytest.raises(content.BadMagic):
        content.validate_asset(data)


def test_bad_version():
    good = make_glb()
    data = good[:4] + struct.pack("<I", 3) + good[8:]
    with pytest.raises(content.BadVersion):
        content.validate_asset(data)


def test_magic_then_garbage_is_truncated():
    data = struct.pack("<III", content.GLB_MAGIC, 2, 20) + b"\xde\xad\xbe\xef\xca\xfe\x00\x01"
    with pytest.raises(content.TruncatedChunk):
        content.validate_asset(data)


def test_declared_length_mismatch():
    good = make_glb()
    data = good[:8] + struct.pack("<I", len(good) + 4) + good[12:]
    with pytest.raises(content.TruncatedChunk):
        content.validate_asset(data)


def test_chunk_overrun():
    # chunk declares more payload than the container holds
    payload = b'{"asset":{"version":"2.0"}}' + b" "
    total = 12 + 8 + len(payload)
    data = (struct.pack("<III", content.GLB_MAGIC, 2, total)
            + struct.pack("<II", len(payload) + 64, content.CHUNK_JSON) + payload)
    with pytest.raises(content.TruncatedChunk):
        content.validate_asset(data)


def test_first_chunk_must_be_json():
    payload = b"\x00" * 16
    total = 12 + 8 + len(payload)
    data = (struct.pack("<III", content.GLB_MAGIC, 2, total)
            + struct.pack("<II", len(payload), content.CHUNK_BIN) + payload)
    with pytest.raises(content.BadMetadata):
        content.validate_asset(data)


def test_unparseable_metadata():
    payload = b"not json" + b" " * 4
    total = 12 + 8 + len(payload)
    data = (struct.pack("<III", content.GLB_MAGIC, 2, total)
            + struct.pack("<II", len(payload), content.CHUNK_JSON) + payload)
    with pytest.raises(content.BadMetadata):
        content.validate_asset(data)


def test_oversize_rejected():
    with pytest.raises(content.OversizeAsset):
        content.validate_asset(b"\x00" * 100, max_bytes=64)


def test_store_idempotent(tmp_path):
    store = content.AssetStore(tmp_path)
    data = make_glb()
    url1 = store.store(data)
    url2 = store.store(data)
    assert url1 == url2
    assert url1.startswith("/assets/") and url1.endswith(".glb")
    assert len(list(tmp_path.glob("*.glb"))) == 1


def test_store_fetch_round_trip(tmp_path):
    store = content.AssetStore(tmp_path)
    data = make_glb()
    url = store.store(data)
    assert store.fetch(url) == data
    assert store.has(url)
    assert not store.has("/assets/" + "0" * 64 + ".glb")
    with pytest.raises(FileNotFoundError):
        store.fetch("/assets/" + "0" * 64 + ".glb")


def test_store_rejects_invalid_bytes(tmp_path):
    store = content.AssetStore(tmp_path)
    with pytest.raises(content.BadMagic):
        store.store(b"\x00" * 64)
    assert list(tmp_path.glob("*.glb")) == []


def test_store_oversize_cap(tmp_path):
    store = content.AssetStore(tmp_path, max_asset_bytes=100)
    with pytest.raises(content.OversizeAsset):
        store.store(make_glb())


def test_storage_full(tmp_path):
    data = make_glb()
    store = content.AssetStore(tmp_path, max_total_bytes=len(data) + 10)
    store.store(data)
    other = build_builtin_glb("co2", quality=1)
    with pytest.raises(content.StorageFull):
        store.store(other)


def test_asset_url_validator(tmp_path):
    store = content.AssetStore(tmp_path)
    url = store.store(make_glb())
    validate = store.asset_url_validator()
    assert validate(url)
    assert validate("https://example.org/a.glb")
    assert not validate("/assets/" + "f" * 64 + ".glb")
    assert not validate("ftp://example.org/a.glb")
    assert not validate("plainfile.glb")


def test_resolve_builtin_assets(tmp_path):
    store = content.AssetStore(tmp_path)
    manifest = content.load_manifest(content.starter_manifest_path())
    resolved = content.resolve_builtin_assets(manifest, store, quality=1)
    urls = [o.asset_url for p in resolved.presets for o in p.objects]
    assert urls and all(u.startswith("/assets/") for u in urls)
    for url in urls:
        assert store.has(url)
        content.validate_asset(store.fetch(url))
    # labels and transforms survive the rewrite
    demo = resolved.preset("demo")
    assert demo.objects[0].label == "water"
