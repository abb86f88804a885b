"""Command-line interface.

Every subcommand takes an optional config file of `key = value` lines plus
flag overrides (flags win); `--dump-config` prints the effective defaults.
Inversion subcommands write the delimited raster and trace outputs together
with rendered figure files.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from .dataio import (
    import_fresnel,
    load_dataset,
    load_map,
    save_dataset,
    save_map,
    save_pgm,
)
from .errors import DataError, NumericalError
from .fields import Wavenumber
from .forward import Circle, sim1_scene, sim2_scene, synth_dataset
from .geometry import PolarizationMode, build_circular_layout, build_grid, split_cv
from .imaging import boundary_energy_fraction, corr_coeff, db_scale
from .pipeline import invert_ilsm, invert_lsm, invert_mmv
from .solver import SolverConfig


class UsageError(Exception):
    pass


_GRID_DEFAULTS = {
    "x_min": -1.0,
    "x_max": 1.0,
    "y_min": -0.4,
    "y_max": 1.6,
    "dx": 0.02,
}

_CV_DEFAULTS = {
    "cv_fraction": 0.0,  # 0 keeps the roles stored in the dataset
    "cv_arc_len": 0.2,
    "cv_offset_deg": 0.0,
}

_RENDER_DEFAULTS = {
    "db_floor": -60.0,
    "db_lo": -30.0,
    "db_hi": 0.0,
    "figures": True,
}

_DEFAULTS = {
    "synth": {
        "scene": "sim1",
        "pol": "TM",
        "frequency_hz": 5e8,
        "radius_tx": 3.0,
        "radius_rx": 3.0,
        "n_tx": 18,
        "rx_step_deg": 5.0,
        "dead_zone_deg": 30.0,
        "snr_db": None,
        "seed": 0,
        "circle_x": 0.0,
        "circle_y": 0.6,
        "circle_radius": 0.2,
        "segments_per_wavelength": 30.0,
        **_CV_DEFAULTS,
    },
    "invert-mmv": {
        **_GRID_DEFAULTS,
        **_CV_DEFAULTS,
        **_RENDER_DEFAULTS,
        "sigma": None,  # None runs the CV-stopped mode
        "max_iters": 600,
        "patience": 30,
        "eps_gap_rel": 1e-6,
        "eps_root": 1e-5,
        "history": 3,
        "gamma": 1e-4,
    },
    "invert-lsm": {**_GRID_DEFAULTS, **_RENDER_DEFAULTS},
    "invert-ilsm": {**_GRID_DEFAULTS, **_RENDER_DEFAULTS, "radius_a": None},
    "metrics": {"scene": "none", "halo": 2},
    "import-fresnel": {
        "frequency_ghz": 16.0,
        "pol": "TM",
        "tx_radius": 0.720,
        "rx_radius": 0.760,
        "tx_count": 0,  # 0 keeps all transmitters
        "rx_angles_relative": True,
        "col_tx_angle": 0,
        "col_rx_angle": 1,
        "col_frequency": 2,
        "col_re_total": 3,
        "col_im_total": 4,
        "col_re_incident": 5,
        "col_im_incident": 6,
    },
}

# keys whose default is None still need a type for config parsing
_NONE_TYPES = {"snr_db": float, "sigma": float, "radius_a": float}


def _parse_value(key, raw, default):
    raw = raw.strip()
    typ = type(default) if default is not None else _NONE_TYPES.get(key, str)
    if raw.lower() in ("none", ""):
        return None
    if typ is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"config key {key!r}: cannot parse {raw!r} as bool")
    try:
        return typ(raw)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from None


def _read_config(path, defaults):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in defaults:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw, defaults[key])
    return values


def _merge_config(cmd, args):
    defaults = _DEFAULTS[cmd]
    cfg = dict(defaults)
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config, defaults))
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _dump_config(cmd):
    for key, value in _DEFAULTS[cmd].items():
        print(f"{key} = {'none' if value is None else value}")


def _add_config_flags(parser, cmd):
    parser.add_argument("--config", help="config file of key = value lines")
    parser.add_argument("--dump-config", action="store_true", help="print defaults and exit")
    for key, value in _DEFAULTS[cmd].items():
        opt = "--" + key.replace("_", "-")
        if isinstance(value, bool) or value is None:
            # parse through the config-value rules so 'none' and booleans work
            parser.add_argument(opt, default=None,
                                type=lambda s, k=key, d=value: _parse_value(k, s, d))
        else:
            parser.add_argument(opt, default=None, type=type(value))


def _build_scene(cfg):
    if cfg["scene"] == "sim1":
        return sim1_scene()
    if cfg["scene"] == "sim2":
        return sim2_scene()
    if cfg["scene"] == "circle":
        return [Circle((cfg["circle_x"], cfg["circle_y"]), cfg["circle_radius"])]
    raise UsageError(f"unknown scene {cfg['scene']!r} (expected sim1, sim2, or circle)")


def _maybe_split(mset, cfg):
    if cfg["cv_fraction"] > 0:
        layout = split_cv(mset.layout, cfg["cv_fraction"], cfg["cv_arc_len"], cfg["cv_offset_deg"])
        return dataclasses.replace(mset, layout=layout)
    return mset


def _cmd_synth(args):
    cfg = _merge_config("synth", args)
    pol = PolarizationMode(cfg["pol"].upper())
    layout = build_circular_layout(
        cfg["radius_tx"], cfg["radius_rx"], int(cfg["n_tx"]),
        cfg["rx_step_deg"], cfg["dead_zone_deg"],
    )
    w = Wavenumber(cfg["frequency_hz"])
    mset = synth_dataset(
        _build_scene(cfg), layout, pol, w,
        snr_db=cfg["snr_db"], seed=int(cfg["seed"]),
        segments_per_wavelength=cfg["segments_per_wavelength"],
    )
    mset = _maybe_split(mset, cfg)
    save_dataset(mset, args.out)
    print(f"wrote {args.out} ({mset.engine} engine, P={mset.layout.n_tx}, Q={mset.layout.n_rx})")
    return 0


def _solver_config(cfg):
    return SolverConfig(
        max_iters=int(cfg["max_iters"]),
        patience=int(cfg["patience"]),
        eps_gap_rel=cfg["eps_gap_rel"],
        eps_root=cfg["eps_root"],
        history=int(cfg["history"]),
        gamma=cfg["gamma"],
    )


def _write_report(prefix, imap, info, cfg, trace=None):
    save_map(imap, prefix + ".map")
    db = db_scale(imap, floor_db=cfg["db_floor"])
    db_range = (cfg["db_lo"], cfg["db_hi"])
    save_pgm(db, prefix + ".pgm", db_range)
    if trace is not None:
        trace.save(prefix + "_trace.tsv")
    if cfg["figures"]:
        from . import plots

        plots.render_indicator(db, prefix + ".png", db_range, title=info["method"])
        if trace is not None:
            plots.render_residuals(trace, prefix + "_residuals.png")
    with open(prefix + "_summary.json", "w") as f:
        json.dump(info, f, indent=2, default=lambda o: None)
        f.write("\n")
    print(f"wrote {prefix}.map / .pgm" + (" / .png" if cfg["figures"] else ""))


def _grid_from(cfg):
    return build_grid((cfg["x_min"], cfg["x_max"], cfg["y_min"], cfg["y_max"]), cfg["dx"])


def _cmd_invert_mmv(args):
    cfg = _merge_config("invert-mmv", args)
    mset = _maybe_split(load_dataset(args.data), cfg)
    grid = _grid_from(cfg)
    imap, trace, info = invert_mmv(mset, grid, _solver_config(cfg), sigma=cfg["sigma"])
    _write_report(args.out_prefix, imap, info, cfg, trace)
    print(
        "iterations=%d exit=%s n_opt=%s r_rec=%.6g"
        % (info["iterations"], info["exit_reason"], info["n_opt"], info["r_rec_final"])
    )
    return 0


def _cmd_invert_lsm(args):
    cfg = _merge_config("invert-lsm", args)
    mset = load_dataset(args.data)
    grid = _grid_from(cfg)
    imap, info = invert_lsm(mset, grid)
    _write_report(args.out_prefix, imap, info, cfg)
    return 0


def _cmd_invert_ilsm(args):
    cfg = _merge_config("invert-ilsm", args)
    mset = load_dataset(args.data)
    grid = _grid_from(cfg)
    imap, info = invert_ilsm(mset, grid, radius_a=cfg["radius_a"])
    _write_report(args.out_prefix, imap, info, cfg)
    print("order=%d radius_a=%.4g" % (info["order"], info["radius_a"]))
    return 0


def _cmd_metrics(args):
    cfg = _merge_config("metrics", args)
    ref = load_map(args.ref)
    img = load_map(args.img)
    print("r_corr = %.12g" % corr_coeff(ref, img))
    if cfg["scene"] != "none":
        scene = sim1_scene() if cfg["scene"] == "sim1" else sim2_scene()
        halo = int(cfg["halo"])
        print("boundary_energy_fraction_ref = %.12g" % boundary_energy_fraction(ref, scene, halo))
        print("boundary_energy_fraction_img = %.12g" % boundary_energy_fraction(img, scene, halo))
    return 0


def _cmd_import_fresnel(args):
    cfg = _merge_config("import-fresnel", args)
    column_map = {
        "tx_angle": int(cfg["col_tx_angle"]),
        "rx_angle": int(cfg["col_rx_angle"]),
        "frequency": int(cfg["col_frequency"]),
        "re_total": int(cfg["col_re_total"]),
        "im_total": int(cfg["col_im_total"]),
        "re_incident": int(cfg["col_re_incident"]),
        "im_incident": int(cfg["col_im_incident"]),
    }
    mset = import_fresnel(
        args.data,
        cfg["frequency_ghz"] * 1e9,
        column_map=column_map,
        polarization=PolarizationMode(cfg["pol"].upper()),
        tx_radius=cfg["tx_radius"],
        rx_radius=cfg["rx_radius"],
        rx_angles_relative=cfg["rx_angles_relative"],
    )
    n_keep = int(cfg["tx_count"])
    if n_keep > 0:
        from .dataio import select_transmitters

        p = mset.layout.n_tx
        if n_keep > p:
            raise UsageError(f"tx_count {n_keep} exceeds the {p} transmitters present")
        idx = np.unique((np.arange(n_keep) * p) // n_keep)
        mset = select_transmitters(mset, idx)
    save_dataset(mset, args.out)
    print(f"wrote {args.out} (P={mset.layout.n_tx}, Q={mset.layout.n_rx})")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mwimage",
        description="Boundary imaging of highly conductive 2-D scatterers "
        "from single-frequency scattered fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=False, help="output dataset path")
    _add_config_flags(p, "synth")
    p.set_defaults(func=_cmd_synth, cmd="synth")

    p = sub.add_parser("invert-mmv", help="group-sparse inversion (CV or known noise)")
    p.add_argument("--data", required=False, help="input dataset")
    p.add_argument("--out-prefix", required=False, help="output file prefix")
    _add_config_flags(p, "invert-mmv")
    p.set_defaults(func=_cmd_invert_mmv, cmd="invert-mmv")

    p = sub.add_parser("invert-lsm", help="linear sampling method baseline")
    p.add_argument("--data", required=False)
    p.add_argument("--out-prefix", required=False)
    _add_config_flags(p, "invert-lsm")
    p.set_defaults(func=_cmd_invert_lsm, cmd="invert-lsm")

    p = sub.add_parser("invert-ilsm", help="improved LSM baseline (TM only)")
    p.add_argument("--data", required=False)
    p.add_argument("--out-prefix", required=False)
    _add_config_flags(p, "invert-ilsm")
    p.set_defaults(func=_cmd_invert_ilsm, cmd="invert-ilsm")

    p = sub.add_parser("metrics", help="compare two indicator rasters")
    p.add_argument("--ref", required=False)
    p.add_argument("--img", required=False)
    _add_config_flags(p, "metrics")
    p.set_defaults(func=_cmd_metrics, cmd="metrics")

    p = sub.add_parser("import-fresnel", help="import laboratory measurement records")
    p.add_argument("--data", required=False, help="raw measurement file")
    p.add_argument("--out", required=False, help="output dataset path")
    _add_config_flags(p, "import-fresnel")
    p.set_defaults(func=_cmd_import_fresnel, cmd="import-fresnel")
    return parser


_REQUIRED = {
    "synth": ("out",),
    "invert-mmv": ("data", "out_prefix"),
    "invert-lsm": ("data", "out_prefix"),
    "invert-ilsm": ("data", "out_prefix"),
    "metrics": ("ref", "img"),
    "import-fresnel": ("data", "out"),
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.dump_config:
        _dump_config(args.cmd)
        return 0
    for name in _REQUIRED[args.cmd]:
        if getattr(args, name) is None:
            parser.error(f"--{name.replace('_', '-')} is required")
    try:
        return args.func(args)
    except (UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, DataError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
