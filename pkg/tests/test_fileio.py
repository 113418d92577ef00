"""Tests for the binary cube container and the JSON/CSV helpers."""

import math
import struct

import numpy as np
import pytest

from vimo.fileio import (CUBE_MAGIC, FileFormatError, canonical_json,
                         config_sha256, radar_config_from_dict, read_csv,
                         read_cube, scene_from_dict, scene_to_dict, write_csv,
                         write_cube, write_waveform_csv)
from vimo.series import DisplacementSeries
from vimo.simulate import (IFDataCube, RadarConfig, RbmSpec, ScatterPoint,
                           SceneSpec, chest_scene)
from vimo.templates import TemplateParams


def small_cube(m=6, k=16, seed=0):
    cfg = RadarConfig(samples_per_chirp=k, n_frames=m)
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
    return IFDataCube(samples=samples, config=cfg)


# ---------------------------------------------------------------------------
# Binary cube container
# ---------------------------------------------------------------------------

def test_cube_roundtrip(tmp_path):
    cube = small_cube()
    path = tmp_path / "cube.vimo"
    write_cube(path, cube)
    back = read_cube(path)
    # payload is float32, so the roundtrip is exact only to single precision
    np.testing.assert_allclose(back.samples, cube.samples, atol=2e-7)
    cfg = back.config
    assert (cfg.n_frames, cfg.samples_per_chirp) == (6, 16)
    assert cfg.frame_rate == cube.config.frame_rate
    assert cfg.f_min == cube.config.f_min
    assert cfg.noise_std == 0.0  # synthesis knob, not stored


def test_cube_header_layout(tmp_path):
    path = tmp_path / "cube.vimo"
    write_cube(path, small_cube())
    raw = path.read_bytes()
    assert raw[:4] == CUBE_MAGIC
    assert struct.unpack_from("<I", raw, 4)[0] == 1  # version
    assert len(raw) == 64 + 2 * 6 * 16 * 4


def test_cube_bad_magic(tmp_path):
    path = tmp_path / "cube.vimo"
    write_cube(path, small_cube())
    raw = bytearray(path.read_bytes())
    raw[:4] = b"WAVE"
    path.write_bytes(bytes(raw))
    with pytest.raises(FileFormatError, match="magic"):
        read_cube(path)


def test_cube_bad_version(tmp_path):
    path = tmp_path / "cube.vimo"
    write_cube(path, small_cube())
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 4, 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(FileFormatError, match="version"):
        read_cube(path)


def test_cube_truncated_payload(tmp_path):
    path = tmp_path / "cube.vimo"
    write_cube(path, small_cube())
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(FileFormatError, match="payload"):
        read_cube(path)


def test_cube_short_header(tmp_path):
    path = tmp_path / "cube.vimo"
    path.write_bytes(b"VIMO" + b"\x00" * 10)
    with pytest.raises(FileFormatError, match="header"):
        read_cube(path)


# ---------------------------------------------------------------------------
# Scene and radar config JSON
# ---------------------------------------------------------------------------

def test_scene_roundtrip_complex_amplitude():
    scene = SceneSpec(
        scatterers=[ScatterPoint(1.2, amplitude=0.8 - 0.3j, motion_gain=0.5,
                                 motion_delay=0.1),
                    ScatterPoint(2.0, amplitude=2.0)],
        truth_params=TemplateParams(c=2500.0),
        rbm=RbmSpec("sway", 3e-4, seed=7),
        noise_seed=42)
    back = scene_from_dict(scene_to_dict(scene))
    assert back.scatterers[0].amplitude == 0.8 - 0.3j
    assert back.scatterers[1].amplitude == 2.0 + 0.0j
    assert back.scatterers[0].motion_delay == 0.1
    assert back.truth_params == scene.truth_params
    assert back.rbm.kind == "sway"
    assert back.rbm.seed == 7
    assert back.noise_seed == 42


def test_scene_roundtrip_defaults():
    scene = chest_scene(1.0)
    back = scene_from_dict(scene_to_dict(scene))
    assert back == scene
    assert back.rbm is None


def test_scene_dict_is_json_ready():
    doc = scene_to_dict(chest_scene(0.5, rbm=RbmSpec("shake", 1e-4)))
    text = canonical_json(doc)
    assert "shake" in text
    assert "'" not in text


def test_radar_config_rejects_unknown_fields():
    assert radar_config_from_dict({"n_frames": 64}).n_frames == 64
    with pytest.raises(ValueError, match="unknown radar config"):
        radar_config_from_dict({"n_frames": 64, "antenna_gain": 3.0})


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def test_csv_roundtrip(tmp_path):
    path = tmp_path / "table.csv"
    write_csv(path, ["seed", "err_pct", "note"],
              [[0, 1], [0.25, float("nan")], ["ok", "bad"]],
              config_hash="ab12", comments=("units: percent",))
    names, cols = read_csv(path)
    assert names == ["seed", "err_pct", "note"]
    assert cols[0] == [0.0, 1.0]
    assert cols[1][0] == 0.25 and math.isnan(cols[1][1])
    assert cols[2] == ["ok", "bad"]
    text = path.read_text()
    assert text.startswith("# config_sha256=ab12\n# units: percent\n")


def test_csv_validation(tmp_path):
    with pytest.raises(ValueError, match="one name per column"):
        write_csv(tmp_path / "x.csv", ["a", "b"], [[1.0]])
    with pytest.raises(ValueError, match="share one length"):
        write_csv(tmp_path / "y.csv", ["a", "b"], [[1.0], [1.0, 2.0]])
    empty = tmp_path / "empty.csv"
    empty.write_text("# only a comment\n")
    with pytest.raises(FileFormatError, match="no header"):
        read_csv(empty)


def test_waveform_csv(tmp_path):
    series = DisplacementSeries(np.array([1e-3, -2e-3, 0.5e-3]), 20.0)
    path = tmp_path / "wave.csv"
    write_waveform_csv(path, series)
    names, cols = read_csv(path)
    assert names == ["time_s", "displacement_m"]
    np.testing.assert_allclose(cols[0], [0.0, 0.05, 0.1])
    np.testing.assert_allclose(cols[1], series.values)


# ---------------------------------------------------------------------------
# Config digests
# ---------------------------------------------------------------------------

def test_config_sha256_stability():
    doc_a = {"b": 1, "a": [1, 2]}
    doc_b = {"a": [1, 2], "b": 1}
    assert config_sha256(doc_a) == config_sha256(doc_b)
    assert config_sha256({"a": [2, 1], "b": 1}) != config_sha256(doc_a)
    assert len(config_sha256(doc_a)) == 64
    assert canonical_json(doc_a) == '{"a":[1,2],"b":1}'
