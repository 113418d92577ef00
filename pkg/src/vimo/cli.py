"""Command-line front end: simulate, extract, ablate.

Each subcommand reads an optional JSON config, writes its outputs under
--out, and stamps every file with the sha256 of the resolved config so
results say what produced them.  Nothing embeds a timestamp: rerunning
a command with the same config and seed reproduces the files byte for
byte.  The VIMO_THREADS environment variable caps worker processes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict, replace

import numpy as np

from .binselect import SelectionConfig, candidate_bins
from .evaluate import AblationGrid, run_ablation, summarize
from .fileio import (FileFormatError, config_sha256, radar_config_from_dict,
                     read_cube, scene_from_dict, scene_to_dict, write_csv,
                     write_cube, write_json, write_waveform_csv)
from .fit import FitConfig, ParamBounds
from .pipeline import METHODS, extract_vitals
from .preprocess import range_fft, remove_clutter
from .simulate import (RBM_DEFAULT_AMPLITUDES, RadarConfig, RbmSpec,
                       chest_scene, confusion_scene, synthesize_if_cube)
from .templates import TemplateParams, render_components

METHOD_FLAGS = {
    "pivimo": "pivimo",
    "msp-fft": "msp_fft",
    "bin-tm": "singlebin_tm",
    "bin-fft": "singlebin_fft",
}


class CliError(Exception):
    """User-facing failure: bad config, bad file, bad value."""


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _method_internal(name: str) -> str:
    if name in METHOD_FLAGS:
        return METHOD_FLAGS[name]
    if name in METHODS:
        return name
    raise CliError(f"unknown method {name!r}; expected one of "
                   f"{sorted(METHOD_FLAGS)} (or internal names {METHODS})")


def _worker_count() -> int:
    """Worker processes: the VIMO_THREADS budget, or the visible CPUs."""
    cap = os.environ.get("VIMO_THREADS")
    if cap is None:
        return os.cpu_count() or 1
    try:
        cap_n = int(cap)
    except ValueError:
        raise CliError(f"VIMO_THREADS must be an integer, got {cap!r}")
    if cap_n < 1:
        raise CliError(f"VIMO_THREADS must be >= 1, got {cap_n}")
    return cap_n


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _build_scene(doc: dict | None, seed: int | None):
    """SceneSpec from a config document, honoring a --seed override.

    Accepts either a full scene document (scatterers listed explicitly)
    or a preset: {"preset": "chest" | "confusion", "base_range": ...}
    with optional rbm_kind / rbm / truth_params / n_scatterers /
    chest_width keys.
    """
    if doc is None:
        doc = {"preset": "chest", "base_range": 0.3}
    if "preset" not in doc:
        scene = scene_from_dict(doc)
        if seed is not None:
            scene = replace(scene, noise_seed=seed)
        return scene

    name = doc["preset"]
    noise_seed = doc.get("noise_seed", 0) if seed is None else seed
    rbm = None
    if doc.get("rbm") is not None:
        r = doc["rbm"]
        band = r.get("band")
        rbm = RbmSpec(kind=r["kind"], amplitude=r.get("amplitude", 0.0),
                      band=tuple(band) if band else None,
                      seed=r.get("seed", 0))
    elif doc.get("rbm_kind") not in (None, "none"):
        kind = doc["rbm_kind"]
        if kind not in RBM_DEFAULT_AMPLITUDES:
            raise CliError(f"unknown rbm_kind {kind!r}")
        rbm = RbmSpec(kind=kind, amplitude=RBM_DEFAULT_AMPLITUDES[kind],
                      seed=noise_seed + 1)

    if name == "chest":
        truth = TemplateParams(**doc.get("truth_params", {}))
        return chest_scene(
            doc.get("base_range", 0.3), truth,
            n_scatterers=doc.get("n_scatterers", 5),
            chest_width=doc.get("chest_width", 0.6),
            rbm=rbm, noise_seed=noise_seed)
    if name == "confusion":
        scene = confusion_scene(doc.get("base_range", 1.0),
                                noise_seed=noise_seed)
        if rbm is not None:
            scene = replace(scene, rbm=rbm)
        return scene
    raise CliError(f"unknown scene preset {name!r}")


def cmd_simulate(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    try:
        radar = radar_config_from_dict(doc.get("radar", {}))
        scene = _build_scene(doc.get("scene"), args.seed)
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(f"invalid simulate config: {exc}") from exc

    cube, truth = synthesize_if_cube(scene, radar)
    resolved = {"scene": scene_to_dict(scene), "radar": asdict(radar)}
    digest = config_sha256(resolved)
    out = _outdir(args)

    cube_path = os.path.join(out, "cube.vimo")
    write_cube(cube_path, cube)

    p = scene.truth_params
    _, y_res, y_h = render_components(p, radar.frame_rate,
                                      radar.window_seconds)
    truth_path = os.path.join(out, "truth.csv")
    write_csv(
        truth_path,
        ["time_s", "displacement_m", "resp_m", "heart_m"],
        [[float(t) for t in truth.times],
         [float(v) for v in truth.values],
         [float(v) for v in y_res],
         [float(v) for v in y_h]],
        config_hash=digest,
        comments=[f"resp_rate_bpm={60.0 / p.T_res:.10g}",
                  f"heart_rate_bpm={60.0 / p.T_h:.10g}"])

    occupied = candidate_bins(range_fft(remove_clutter(cube)))
    snr = ("inf" if radar.noise_std <= 0
           else f"{-20.0 * np.log10(radar.noise_std):.1f}")
    print(f"wrote {cube_path} ({radar.n_frames} frames x "
          f"{radar.samples_per_chirp} samples) and {truth_path}")
    print(f"occupied bins: {occupied}")
    print(f"per-sample snr: {snr} dB")
    print(f"truth rates: resp {60.0 / p.T_res:.2f} bpm, "
          f"heart {60.0 / p.T_h:.2f} bpm")
    return 0


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------

def _fit_config_from_dict(doc: dict) -> FitConfig:
    doc = dict(doc)
    kwargs = {}
    if "bounds" in doc:
        b = doc.pop("bounds")
        kwargs["bounds"] = ParamBounds(lower=tuple(b["lower"]),
                                       upper=tuple(b["upper"]))
    for key in ("resp_unit", "heart_unit"):
        if key in doc:
            kwargs[key] = np.asarray(doc.pop(key), dtype=float)
    kwargs.update(doc)
    return FitConfig(**kwargs)


def cmd_extract(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    method_name = args.method or doc.get("method", "pivimo")
    method = _method_internal(method_name)
    try:
        sel = SelectionConfig(**doc.get("selection", {}))
        fit_cfg = _fit_config_from_dict(doc.get("fit", {}))
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(f"invalid extract config: {exc}") from exc

    cube = read_cube(args.cube)
    resolved = {"method": method, "selection": asdict(sel),
                "fit": {k: v for k, v in doc.get("fit", {}).items()}}
    digest = config_sha256(resolved)
    out = _outdir(args)

    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        result = extract_vitals(cube, method=method,
                                sel_config=sel, fit_config=fit_cfg)
    notes = list(result.warnings)
    for w in rec:
        msg = str(w.message)
        if msg not in notes:
            notes.append(msg)

    payload = {
        "method": method,
        "resp_rate_bpm": result.resp_rate_bpm,
        "heart_rate_bpm": result.heart_rate_bpm,
        "warnings": notes,
        "fit": None,
    }
    if result.fit is not None:
        payload["fit"] = {
            "params": asdict(result.fit.params),
            "sse": result.fit.sse,
            "converged": result.fit.converged,
            "n_iters": result.fit.n_iters,
        }
    write_json(os.path.join(out, "result.json"), payload, config_hash=digest)

    write_waveform_csv(os.path.join(out, "displacement.csv"),
                       result.displacement, config_hash=digest)
    write_waveform_csv(os.path.join(out, "resp.csv"), result.resp_wave,
                       name="resp_m", config_hash=digest)
    write_waveform_csv(os.path.join(out, "heart.csv"), result.heart_wave,
                       name="heart_m", config_hash=digest)

    if result.selection is not None:
        s = result.selection
        write_json(os.path.join(out, "selection.json"), {
            "candidates": [int(b) for b in s.candidates],
            "msp_bins": [int(b) for b in s.msp_bins],
            "detection": {str(b): label for b, label in s.detection.items()},
            "ratios": {str(b): float(r) for b, r in s.ratios.items()},
        }, config_hash=digest)

    print(f"{method}: resp {result.resp_rate_bpm:.2f} bpm, "
          f"heart {result.heart_rate_bpm:.2f} bpm")
    for note in notes:
        print(f"note: {note}")
    return 0


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------

def _grid_from_dict(doc: dict) -> AblationGrid:
    kwargs = {}
    if "ranges" in doc:
        kwargs["ranges"] = tuple(float(r) for r in doc["ranges"])
    if "rbm_kinds" in doc:
        kwargs["rbm_kinds"] = tuple(doc["rbm_kinds"])
    if "n_seeds" in doc:
        kwargs["n_seeds"] = int(doc["n_seeds"])
    if "methods" in doc:
        kwargs["methods"] = tuple(_method_internal(m) for m in doc["methods"])
    if "snr_db" in doc:
        kwargs["snr_db"] = float(doc["snr_db"])
    if "truth_params" in doc:
        kwargs["truth_params"] = TemplateParams(**doc["truth_params"])
    if "rbm_amplitudes" in doc:
        kwargs["rbm_amplitudes"] = {k: float(v)
                                    for k, v in doc["rbm_amplitudes"].items()}
    unknown = set(doc) - {"ranges", "rbm_kinds", "n_seeds", "methods",
                          "snr_db", "truth_params", "rbm_amplitudes"}
    if unknown:
        raise CliError(f"unknown ablate config fields: {sorted(unknown)}")
    return AblationGrid(**kwargs)


def _quantile_rows(reports, field):
    """Boxplot quantiles per (method, range, rbm) cell, NaN-trials dropped."""
    cells = {}
    for r in reports:
        cells.setdefault((r.method, r.base_range, r.rbm_kind), []).append(
            getattr(r, field))
    rows = []
    for (method, rng, kind), vals in sorted(cells.items()):
        clean = [v for v in vals if v == v]
        qs = (list(np.quantile(clean, [0.05, 0.25, 0.5, 0.75, 0.95]))
              if clean else [float("nan")] * 5)
        rows.append([method, rng, kind] + [float(q) for q in qs])
    return rows


def cmd_ablate(args) -> int:
    doc = _load_json(args.config) if args.config else {}
    try:
        grid = _grid_from_dict(doc)
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(f"invalid ablate config: {exc}") from exc
    master_seed = args.seed if args.seed is not None else 0
    n_workers = _worker_count()

    resolved = {"grid": asdict(grid), "master_seed": master_seed}
    digest = config_sha256(resolved)
    out = _outdir(args)

    reports = run_ablation(grid, master_seed=master_seed, n_workers=n_workers)

    trial_fields = ["method", "base_range", "rbm_kind", "seed",
                    "resp_rate_bpm", "heart_rate_bpm", "resp_error_pct",
                    "heart_error_pct", "pcc_resp", "pcc_heart", "note"]
    write_csv(os.path.join(out, "trials.csv"), trial_fields,
              [[getattr(r, f) for r in reports] for f in trial_fields],
              config_hash=digest)

    summary = summarize(reports)
    summary["master_seed"] = master_seed
    summary["n_trials"] = len(reports)
    write_json(os.path.join(out, "summary.json"), summary,
               config_hash=digest)

    quant_names = ["method", "base_range", "rbm_kind",
                   "q05", "q25", "q50", "q75", "q95"]
    for field, fname in (("resp_error_pct", "plot_resp_error.csv"),
                         ("heart_error_pct", "plot_heart_error.csv")):
        rows = _quantile_rows(reports, field)
        write_csv(os.path.join(out, fname), quant_names,
                  [[row[i] for row in rows] for i in range(len(quant_names))],
                  config_hash=digest)

    n_failed = sum(1 for r in reports if r.note.startswith("failed"))
    print(f"{len(reports)} trials ({n_workers} workers), "
          f"{n_failed} recorded failures")
    for method, stats in summary["methods"].items():
        print(f"{method}: median resp err "
              f"{stats['resp_error_pct']['median']:.3f}%, median heart err "
              f"{stats['heart_error_pct']['median']:.3f}%")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vimo",
        description="FMCW radar vital-sign simulation and extraction")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate",
                           help="synthesize an IF cube and its ground truth")
    p_sim.add_argument("--config", help="scene + radar JSON")
    p_sim.add_argument("--seed", type=int, help="override the noise seed")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_ext = sub.add_parser("extract",
                           help="estimate vital signs from a cube file")
    p_ext.add_argument("cube", help="binary cube file")
    p_ext.add_argument("--config",
                       help="JSON with selection/fit overrides")
    p_ext.add_argument("--seed", type=int,
                       help="accepted for interface symmetry; extraction "
                            "is deterministic")
    p_ext.add_argument("--method", choices=sorted(METHOD_FLAGS),
                       help="extraction method (default pivimo)")
    p_ext.add_argument("--out", default=".", help="output directory")
    p_ext.set_defaults(func=cmd_extract)

    p_abl = sub.add_parser("ablate",
                           help="run the method x scene ablation grid")
    p_abl.add_argument("--config", help="grid spec JSON")
    p_abl.add_argument("--seed", type=int, help="master seed (default 0)")
    p_abl.add_argument("--out", default=".", help="output directory")
    p_abl.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
