"""Line-oriented text formats: canonical datasets, indicator rasters,
portable graymaps, and the Fresnel laboratory-data importer.

All formats are versioned, locale-independent, and round-trip numeric
fields bit-exactly (17 significant digits).
"""

import numpy as np

from .errors import DataError
from .forward import MeasurementSet
from .geometry import ImagingGrid, PolarizationMode, TransceiverLayout
from .imaging import IndicatorMap

DATASET_MAGIC = "mwimage-dataset v1"
MAP_MAGIC = "mwimage-map v1"


def _fmt(x):
    return "%.17g" % float(x)


def save_dataset(mset, path):
    """Write a MeasurementSet in the canonical dataset format."""
    layout = mset.layout
    c = mset.channels_per_receiver
    mask = mset.channel_mask()
    with open(path, "w") as f:
        f.write(DATASET_MAGIC + "\n")
        f.write("frequency_hz = %s\n" % _fmt(mset.frequency))
        f.write("polarization = %s\n" % mset.polarization.value)
        f.write("component = %s\n" % mset.component)
        f.write("engine = %s\n" % mset.engine)
        if mset.snr_db is not None:
            f.write("snr_db = %s\n" % _fmt(mset.snr_db))
        if mset.seed is not None:
            f.write("seed = %d\n" % mset.seed)
        f.write("tx_count = %d\n" % layout.n_tx)
        f.write("rx_count = %d\n" % layout.n_rx)
        for i, (x, y) in enumerate(layout.tx):
            f.write("tx %d %s %s\n" % (i, _fmt(x), _fmt(y)))
        for i, (x, y) in enumerate(layout.rx):
            role = "cv" if layout.rx_is_cv[i] else "recon"
            f.write("rx %d %s %s %s\n" % (i, _fmt(x), _fmt(y), role))
        f.write("data\n")
        for p in range(layout.n_tx):
            for q in range(layout.n_rx):
                for comp in range(c):
                    row = c * q + comp
                    v = mset.y[row, p]
                    flag = 0 if mask[row, p] else 1
                    f.write(
                        "%d %d %d %s %s %d\n"
                        % (p, q, comp, _fmt(v.real), _fmt(v.imag), flag)
                    )
        f.write("end\n")


def _bad(path, lineno, msg):
    return DataError(f"{path}:{lineno}: {msg}")


def load_dataset(path):
    """Read a canonical dataset back into a MeasurementSet."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != DATASET_MAGIC:
        raise DataError(f"{path}:1: not a '{DATASET_MAGIC}' file")

    header = {}
    tx_rows = {}
    rx_rows = {}
    i = 1
    n = len(lines)
    while i < n:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "data":
            break
        parts = line.split()
        if parts[0] == "tx":
            try:
                idx = int(parts[1])
                tx_rows[idx] = (float(parts[2]), float(parts[3]))
            except (IndexError, ValueError):
                raise _bad(path, i, "malformed tx row") from None
        elif parts[0] == "rx":
            try:
                idx = int(parts[1])
                if parts[4] not in ("recon", "cv"):
                    raise ValueError
                rx_rows[idx] = (float(parts[2]), float(parts[3]), parts[4] == "cv")
            except (IndexError, ValueError):
                raise _bad(path, i, "malformed rx row") from None
        elif "=" in line:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
        else:
            raise _bad(path, i, f"unexpected header line {line!r}")
    else:
        raise _bad(path, n, "missing 'data' section")

    try:
        freq = float(header["frequency_hz"])
        pol = PolarizationMode(header["polarization"])
        p_count = int(header["tx_count"])
        q_count = int(header["rx_count"])
    except (KeyError, ValueError) as e:
        raise DataError(f"{path}: bad or missing header field ({e})") from None
    component = header.get("component", "full")
    engine = header.get("engine", "measured")
    snr_db = float(header["snr_db"]) if "snr_db" in header else None
    seed = int(header["seed"]) if "seed" in header else None

    if sorted(tx_rows) != list(range(p_count)):
        raise DataError(f"{path}: tx rows do not cover 0..{p_count - 1}")
    if sorted(rx_rows) != list(range(q_count)):
        raise DataError(f"{path}: rx rows do not cover 0..{q_count - 1}")
    tx = np.array([tx_rows[k] for k in range(p_count)])
    rx = np.array([(rx_rows[k][0], rx_rows[k][1]) for k in range(q_count)])
    is_cv = np.array([rx_rows[k][2] for k in range(q_count)], dtype=bool)

    c = 1 if (pol is PolarizationMode.TM or component == "tangential") else 2
    y = np.zeros((c * q_count, p_count), dtype=complex)
    active = np.zeros((p_count, q_count), dtype=bool)
    seen = set()
    ended = False
    while i < n:
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "end":
            ended = True
            break
        parts = line.split()
        if len(parts) != 6:
            raise _bad(path, i, f"malformed data row (expected 6 fields, got {len(parts)})")
        try:
            p, q, comp = int(parts[0]), int(parts[1]), int(parts[2])
            re, im = float(parts[3]), float(parts[4])
            flag = int(parts[5])
        except ValueError:
            raise _bad(path, i, "non-numeric data row") from None
        if not (0 <= p < p_count and 0 <= q < q_count and 0 <= comp < c):
            raise _bad(path, i, "data row indices out of range")
        if flag not in (0, 1):
            raise _bad(path, i, "mask flag must be 0 or 1")
        key = (p, q, comp)
        if key in seen:
            raise _bad(path, i, f"duplicate entry for tx={p} rx={q} comp={comp}")
        seen.add(key)
        y[c * q + comp, p] = re + 1j * im
        if flag == 0:
            active[p, q] = True
    if not ended:
        raise _bad(path, n, "missing 'end' line (truncated file)")

    layout = TransceiverLayout(tx, rx, is_cv, active)
    return MeasurementSet(
        y=y,
        polarization=pol,
        frequency=freq,
        layout=layout,
        snr_db=snr_db,
        seed=seed,
        engine=engine,
        component=component,
    )


DEFAULT_FRESNEL_COLUMNS = {
    "tx_angle": 0,
    "rx_angle": 1,
    "frequency": 2,
    "re_total": 3,
    "im_total": 4,
    "re_incident": 5,
    "im_incident": 6,
}


def _angle_step(values, path, what):
    vals = np.unique(np.round(np.asarray(values, dtype=float), 9))
    if vals.size == 1:
        return 360.0
    step = float(np.min(np.diff(vals)))
    if step <= 0 or np.any(np.abs(np.mod(vals - vals[0] + 0.5 * step, step) - 0.5 * step) > 1e-6):
        raise DataError(f"{path}: inconsistent {what} angular grid")
    return step


def import_fresnel(
    path,
    frequency_hz,
    column_map=None,
    polarization=PolarizationMode.TM,
    tx_radius=0.720,
    rx_radius=0.760,
    rx_angles_relative=True,
    frequency_unit="GHz",
):
    """Import laboratory measurement records into a canonical MeasurementSet.

    Rows are whitespace-delimited numbers; non-numeric lines are skipped as
    comments. column_map assigns the record fields (tx_angle, rx_angle,
    frequency, re/im total, re/im incident) to column indices. The scattered
    field is total minus incident; one frequency slice is selected per call.
    TE data is imported as the single tangential component.
    """
    cols = dict(DEFAULT_FRESNEL_COLUMNS)
    if column_map:
        unknown = set(column_map) - set(cols)
        if unknown:
            raise ValueError(f"unknown column_map keys: {sorted(unknown)}")
        cols.update(column_map)
    funit = {"ghz": 1e9, "mhz": 1e6, "hz": 1.0}[frequency_unit.lower()]

    rows = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                vals = [float(t) for t in parts]
            except ValueError:
                continue  # header or comment line
            if len(vals) <= max(cols.values()):
                raise _bad(path, lineno, f"row has {len(vals)} columns, need {max(cols.values()) + 1}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no numeric rows found")
    data = np.asarray(rows)

    freqs = data[:, cols["frequency"]] * funit
    available = np.unique(np.round(freqs, 3))
    sel = np.abs(freqs - frequency_hz) <= 1e-6 * frequency_hz
    if not np.any(sel):
        raise DataError(
            f"{path}: frequency {frequency_hz:g} Hz not present "
            f"(available: {', '.join('%g' % v for v in available)})"
        )
    data = data[sel]

    tx_deg = data[:, cols["tx_angle"]]
    rx_deg = data[:, cols["rx_angle"]]
    abs_deg = np.mod(tx_deg + rx_deg, 360.0) if rx_angles_relative else np.mod(rx_deg, 360.0)

    tx_step = _angle_step(tx_deg, path, "transmitter")
    rx_step = _angle_step(abs_deg, path, "receiver")
    tx_vals = np.unique(np.round(tx_deg, 9))
    n_rx = int(round(360.0 / rx_step))

    p_count = tx_vals.size
    tx_ang = np.deg2rad(tx_vals)
    rx_ang = np.deg2rad(rx_step) * np.arange(n_rx)
    tx = tx_radius * np.column_stack([np.cos(tx_ang), np.sin(tx_ang)])
    rx = rx_radius * np.column_stack([np.cos(rx_ang), np.sin(rx_ang)])

    y = np.zeros((n_rx, p_count), dtype=complex)
    active = np.zeros((p_count, n_rx), dtype=bool)
    zero_rows = []
    seen = set()
    for r in range(data.shape[0]):
        p = int(np.argmin(np.abs(tx_vals - tx_deg[r])))
        q = int(round(abs_deg[r] / rx_step)) % n_rx
        if abs(abs_deg[r] - (q * rx_step) % 360.0) > 1e-6 and abs(abs_deg[r] - 360.0) > 1e-6:
            raise DataError(f"{path}: receiver angle {abs_deg[r]:g} deg off the {rx_step:g} deg ring")
        if (p, q) in seen:
            raise DataError(f"{path}: duplicate sample for tx {tx_deg[r]:g} deg, rx {abs_deg[r]:g} deg")
        seen.add((p, q))
        total = data[r, cols["re_total"]] + 1j * data[r, cols["im_total"]]
        incident = data[r, cols["re_incident"]] + 1j * data[r, cols["im_incident"]]
        if total == 0 and incident == 0:
            zero_rows.append((p, q))
        y[q, p] = total - incident
        active[p, q] = True

    layout = TransceiverLayout(tx, rx, np.zeros(n_rx, dtype=bool), active)
    component = "tangential" if polarization is PolarizationMode.TE else "full"
    meta = {"source": str(path)}
    if zero_rows:
        meta["zero_samples"] = zero_rows
    return MeasurementSet(
        y=y,
        polarization=polarization,
        frequency=float(frequency_hz),
        layout=layout,
        engine="measured",
        component=component,
        meta=meta,
    )


def select_transmitters(mset, indices):
    """Restrict a dataset to a transmitter subset (new MeasurementSet)."""
    idx = np.asarray(indices, dtype=int)
    layout = mset.layout
    new_layout = TransceiverLayout(
        layout.tx[idx], layout.rx, layout.rx_is_cv, layout.active[idx]
    )
    return MeasurementSet(
        y=mset.y[:, idx],
        polarization=mset.polarization,
        frequency=mset.frequency,
        layout=new_layout,
        snr_db=mset.snr_db,
        seed=mset.seed,
        engine=mset.engine,
        component=mset.component,
        meta=dict(mset.meta),
    )


def save_map(imap, path):
    """Write an indicator raster: one header line, then ny rows of nx values."""
    g = imap.grid
    with open(path, "w") as f:
        f.write(
            "# %s kind=%s scale=%s nx=%d ny=%d x_min=%s x_max=%s y_min=%s y_max=%s dx=%s\n"
            % (
                MAP_MAGIC,
                imap.kind,
                imap.scale,
                g.nx,
                g.ny,
                _fmt(g.x_min),
                _fmt(g.x_max),
                _fmt(g.y_min),
                _fmt(g.y_max),
                _fmt(g.dx),
            )
        )
        img = imap.as_image()
        for iy in range(g.ny):
            f.write(" ".join(_fmt(v) for v in img[iy]) + "\n")


def load_map(path):
    """Read an indicator raster written by save_map."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("# " + MAP_MAGIC):
        raise DataError(f"{path}:1: not a '{MAP_MAGIC}' raster")
    fields = {}
    for tok in lines[0].split()[3:]:
        key, _, value = tok.partition("=")
        fields[key] = value
    try:
        grid = ImagingGrid(
            float(fields["x_min"]),
            float(fields["x_max"]),
            float(fields["y_min"]),
            float(fields["y_max"]),
            float(fields["dx"]),
            int(fields["nx"]),
            int(fields["ny"]),
        )
        kind = fields["kind"]
        scale = fields["scale"]
    except (KeyError, ValueError) as e:
        raise DataError(f"{path}:1: bad raster header ({e})") from None
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        try:
            row = [float(t) for t in line.split()]
        except ValueError:
            raise _bad(path, lineno, "non-numeric raster row") from None
        if len(row) != grid.nx:
            raise _bad(path, lineno, f"expected {grid.nx} values, got {len(row)}")
        rows.append(row)
    if len(rows) != grid.ny:
        raise DataError(f"{path}: expected {grid.ny} raster rows, got {len(rows)}")
    return IndicatorMap(np.asarray(rows).ravel(), grid, kind, scale=scale)


def save_pgm(imap, path, db_range=(-30.0, 0.0)):
    """Export a dB-scale map as an ASCII portable graymap (P2)."""
    if imap.scale != "db":
        raise ValueError("save_pgm expects a dB-scale map")
    lo, hi = db_range
    if not hi > lo:
        raise ValueError("empty dB display range")
    img = imap.as_image()
    level = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    gray = np.round(level * 255).astype(int)
    with open(path, "w") as f:
        f.write("P2\n# %s %s in dB, range [%g, %g]\n%d %d\n255\n"
                % (imap.kind, MAP_MAGIC, lo, hi, imap.grid.nx, imap.grid.ny))
        for iy in range(imap.grid.ny - 1, -1, -1):  # top row = largest y
            f.write(" ".join(str(v) for v in gray[iy]) + "\n")
