"""Cube files, scene and config JSON, and CSV exports.

The IF cube file is little-endian binary: a 64-byte header (magic
"VIMO", version u32, M u32, K u32, then frame_rate, f_min, bandwidth,
chirp_duration as f64, then 16 reserved bytes carrying a truncated
radar-config digest) followed by M*K interleaved (float32 real,
float32 imag) samples in frame-major order.

JSON documents use the dataclass field names directly.  Every writer
here can stamp a config digest into its output (a header comment for
CSV, a top-level key for JSON) so downstream files say what produced
them without relying on timestamps, which would break byte-identical
reruns.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, fields

import numpy as np

from .simulate import IFDataCube, RadarConfig, RbmSpec, ScatterPoint, SceneSpec
from .templates import TemplateParams

CUBE_MAGIC = b"VIMO"
CUBE_VERSION = 1
_HEADER = struct.Struct("<4sIII4d16s")  # 64 bytes total


class FileFormatError(ValueError):
    """A cube file failed structural validation."""


# ---------------------------------------------------------------------------
# Config digests
# ---------------------------------------------------------------------------

def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_sha256(obj) -> str:
    """Hex digest of an object's canonical JSON form."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _config_digest16(config: RadarConfig) -> bytes:
    return bytes.fromhex(config_sha256(asdict(config)))[:16]


# ---------------------------------------------------------------------------
# Binary cube
# ---------------------------------------------------------------------------

def write_cube(path, cube: IFDataCube) -> None:
    """Write an IF cube in the binary container format."""
    cfg = cube.config
    header = _HEADER.pack(
        CUBE_MAGIC, CUBE_VERSION, cfg.n_frames, cfg.samples_per_chirp,
        cfg.frame_rate, cfg.f_min, cfg.bandwidth, cfg.chirp_duration,
        _config_digest16(cfg))
    flat = np.asarray(cube.samples, dtype=np.complex64).ravel()
    payload = np.empty(2 * flat.size, dtype="<f4")
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_cube(path) -> IFDataCube:
    """Read a binary cube file back into an IFDataCube.

    The header does not carry noise_std (a synthesis knob, not a cube
    property), so the reconstructed config reports 0 there.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FileFormatError(f"{path}: file shorter than the 64-byte header")
    magic, version, m, k, frame_rate, f_min, bandwidth, chirp_duration, _ = \
        _HEADER.unpack_from(raw)
    if magic != CUBE_MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != CUBE_VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    want = 2 * m * k * 4
    body = raw[_HEADER.size:]
    if len(body) != want:
        raise FileFormatError(
            f"{path}: payload is {len(body)} bytes, header promises {want}")
    try:
        config = RadarConfig(
            f_min=f_min, bandwidth=bandwidth, chirp_duration=chirp_duration,
            samples_per_chirp=k, frame_rate=frame_rate, n_frames=m)
    except ValueError as exc:
        raise FileFormatError(f"{path}: invalid header fields: {exc}") from exc
    pairs = np.frombuffer(body, dtype="<f4").astype(np.float64)
    samples = (pairs[0::2] + 1j * pairs[1::2]).reshape(m, k)
    return IFDataCube(samples=samples, config=config)


# ---------------------------------------------------------------------------
# Scene and radar config JSON
# ---------------------------------------------------------------------------

def scene_to_dict(scene: SceneSpec) -> dict:
    out = {
        "scatterers": [
            {
                "base_range": s.base_range,
                "amplitude": (s.amplitude.real if s.amplitude.imag == 0
                              else [s.amplitude.real, s.amplitude.imag]),
                "motion_gain": s.motion_gain,
                "motion_delay": s.motion_delay,
            }
            for s in scene.scatterers
        ],
        "truth_params": asdict(scene.truth_params),
        "rbm": None,
        "noise_seed": scene.noise_seed,
    }
    if scene.rbm is not None:
        out["rbm"] = {"kind": scene.rbm.kind, "amplitude": scene.rbm.amplitude,
                      "band": list(scene.rbm.band) if scene.rbm.band else None,
                      "seed": scene.rbm.seed}
    return out


def _amplitude_from_json(value) -> complex:
    if isinstance(value, (list, tuple)):
        re, im = value
        return complex(re, im)
    return complex(value)


def scene_from_dict(doc: dict) -> SceneSpec:
    scatterers = [
        ScatterPoint(
            base_range=s["base_range"],
            amplitude=_amplitude_from_json(s.get("amplitude", 1.0)),
            motion_gain=s.get("motion_gain", 1.0),
            motion_delay=s.get("motion_delay", 0.0),
        )
        for s in doc["scatterers"]
    ]
    truth = TemplateParams(**doc.get("truth_params", {}))
    rbm_doc = doc.get("rbm")
    rbm = None
    if rbm_doc is not None:
        band = rbm_doc.get("band")
        rbm = RbmSpec(kind=rbm_doc["kind"],
                      amplitude=rbm_doc.get("amplitude", 0.0),
                      band=tuple(band) if band else None,
                      seed=rbm_doc.get("seed", 0))
    return SceneSpec(scatterers=scatterers, truth_params=truth,
                     rbm=rbm, noise_seed=doc.get("noise_seed", 0))


def radar_config_from_dict(doc: dict) -> RadarConfig:
    known = {f.name for f in fields(RadarConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown radar config fields: {sorted(unknown)}")
    return RadarConfig(**doc)


# ---------------------------------------------------------------------------
# CSV and JSON writers
# ---------------------------------------------------------------------------

def _format_cell(v) -> str:
    if isinstance(v, float):
        if v != v:  # NaN
            return "nan"
        return format(v, ".10g")
    return str(v)


def write_csv(path, names, columns, *, config_hash: str | None = None,
              comments=()) -> None:
    """Write named columns, optionally stamped with a config digest line."""
    columns = [list(c) for c in columns]
    if len(names) != len(columns):
        raise ValueError("one name per column required")
    n_rows = len(columns[0]) if columns else 0
    if any(len(c) != n_rows for c in columns):
        raise ValueError("columns must share one length")
    with open(path, "w") as fh:
        if config_hash is not None:
            fh.write(f"# config_sha256={config_hash}\n")
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n_rows):
            fh.write(",".join(_format_cell(c[i]) for c in columns) + "\n")


def read_csv(path):
    """Read a write_csv file back as (names, list of column lists).

    Cells parse as float when they can; everything else stays a string.
    """
    names = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if names is None:
                names = line.split(",")
                continue
            cells = []
            for cell in line.split(","):
                try:
                    cells.append(float(cell))
                except ValueError:
                    cells.append(cell)
            rows.append(cells)
    if names is None:
        raise FileFormatError(f"{path}: no header row")
    columns = [[r[i] for r in rows] for i in range(len(names))]
    return names, columns


def write_json(path, payload: dict, *, config_hash: str | None = None) -> None:
    doc = dict(payload)
    if config_hash is not None:
        doc["config_sha256"] = config_hash
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_waveform_csv(path, series, *, name: str = "displacement_m",
                       config_hash: str | None = None) -> None:
    """One (time_s, value) row per frame of a displacement series."""
    write_csv(path, ["time_s", name],
              [[float(t) for t in series.times],
               [float(v) for v in series.values]],
              config_hash=config_hash)
