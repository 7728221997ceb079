"""Named experiments driven by an :class:`~memopl.config.ExperimentConfig`.

Each ``cmd_*`` function runs one experiment, writes its artifacts (PGM
images, PBM edge maps, CSV traces and metrics, plus the resolved config) into
an output directory and returns a dict of the headline numbers.  Outputs only
depend on the config and seed, so reruns are byte-identical.
"""
from __future__ import annotations

import csv
import math
import os

import numpy as np

from . import images
from .config import ExperimentConfig, dump_config
from .device import MemristorParams, window_from_name
from .grid import FaultSpec, Grid, Topology, build_grid, grid_distance, inject_faults, set_bias
from .imaging import (
    FuseMajority,
    OutputBand,
    add_gaussian_noise,
    brighten,
    check_image,
    detect_edges,
    edge_iou,
    intensity_mismatch,
    prewitt,
    read_smoothed,
    sobel,
    transcribe_to_bias,
)
from .netpbm import read_pgm, write_pbm, write_pgm
from .solver import SimConfig, run

SYNTHETIC = ("cartoon", "rubiks_cube", "step")


# -- builders -----------------------------------------------------------------

def device_params(cfg: ExperimentConfig) -> MemristorParams:
    d = cfg.device
    return MemristorParams(
        r_on=d.r_on, r_off=d.r_off, d=d.d, mu_v=d.mu_v,
        window=window_from_name(d.window, d.window_p, d.window_j),
    )


def sim_config(cfg: ExperimentConfig, **changes) -> SimConfig:
    s = cfg.sim
    fields = dict(dt=s.dt, t_end=s.t_end, max_dx_per_step=s.max_dx_per_step,
                  linear_tol=s.linear_tol, record_every=s.record_every)
    fields.update(changes)
    return SimConfig(**fields)


def threshold_spec(cfg: ExperimentConfig, m_t: float | None = None):
    t = cfg.threshold
    if t.scheme == "output_band":
        return OutputBand(t.band_lo, t.band_hi)
    if t.scheme == "fuse_majority":
        return FuseMajority(t.m_t if m_t is None else m_t, t.min_count, t.per_half)
    raise ValueError(f"unknown threshold scheme {t.scheme!r}")


def load_image(cfg: ExperimentConfig) -> np.ndarray:
    """The configured input image with ``image.brightness`` applied."""
    src = cfg.image.source
    w, h = cfg.grid.width, cfg.grid.height
    if src in SYNTHETIC:
        if src == "step":
            img = images.step_image(h, w)
        else:
            if w != h:
                raise ValueError(f"synthetic image {src!r} needs a square grid, got {w}x{h}")
            img = getattr(images, src)(w)
    elif os.path.isfile(src):
        img = read_pgm(src)
    else:
        raise FileNotFoundError(f"image source {src!r} is neither a synthetic name nor a file")
    if cfg.image.brightness != 1.0:
        img = brighten(img, cfg.image.brightness)
    return check_image(img)


def make_grid(cfg: ExperimentConfig, shape, topology: str | None = None) -> Grid:
    g = cfg.grid
    topo = Topology(topology or g.topology, shape[1], shape[0])
    return build_grid(topo, device_params(cfg), m_init=g.m_init, series_r=g.series_r,
                      output_load=g.output_load, output_termination=g.output_termination)


def weighted_average_error(grid: Grid, v: np.ndarray) -> float:
    """Largest deviation of a node voltage from the conductance-weighted mean of its sources.

    Each node voltage must equal the average of its bias, its output
    termination and its neighbors' voltages, weighted by the conductance of
    the connecting branch.  The estimate is rebuilt here from the branch
    memristances alone and compared in the inf-norm, relative to ``max|v|``.
    """
    m_fuse = grid.fuse_memristances()
    m_out = grid.output_memristances() + grid.output_load
    num = grid.bias / grid.series_r + grid.output_termination_voltage() / m_out
    den = 1.0 / grid.series_r + 1.0 / m_out
    a, b = grid.edges[:, 0], grid.edges[:, 1]
    num = num + np.bincount(a, v[b] / m_fuse, grid.n_nodes) + np.bincount(b, v[a] / m_fuse, grid.n_nodes)
    den = den + np.bincount(a, 1.0 / m_fuse, grid.n_nodes) + np.bincount(b, 1.0 / m_fuse, grid.n_nodes)
    scale = np.max(np.abs(v))
    if scale == 0.0:
        return float(np.max(np.abs(num / den)))
    return float(np.max(np.abs(v - num / den)) / scale)


class _Eq:
    """Tracks :func:`weighted_average_error` over every recorded instant of a run."""

    def __init__(self):
        self.worst = 0.0

    def __call__(self, t, grid, v):
        self.worst = max(self.worst, weighted_average_error(grid, v))


# -- output helpers -----------------------------------------------------------

def _prepare(cfg: ExperimentConfig, out: str | None) -> str:
    out = out or cfg.run.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_metrics(path: str, metrics: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in metrics.items():
            w.writerow([k, _fmt(v)])


def write_table(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def simulate_image(cfg: ExperimentConfig, img, topology=None, faults: FaultSpec | None = None,
                   sim: SimConfig | None = None, on_record=None):
    """Bias a fresh grid with ``img`` (optionally faulty) and run it.

    Returns ``(traces, final_grid, fault_map, max_weighted_average_error)``.
    """
    grid = set_bias(make_grid(cfg, img.shape, topology), transcribe_to_bias(img, cfg.image.v_max))
    fault_map = None
    if faults is not None:
        grid, fault_map = inject_faults(grid, faults)
    eq = _Eq()

    def hook(t, g, v):
        eq(t, g, v)
        if on_record is not None:
            on_record(t, g, v)

    traces, final = run(grid, sim or sim_config(cfg), on_record=hook)
    return traces, final, fault_map, eq.worst


# -- experiments --------------------------------------------------------------

def fuse_classes(grid: Grid, center: int) -> list[str]:
    """Label each fuse by the grid distances of its endpoints from ``center``."""
    topo = grid.topology
    c = topo.node(center)
    labels = []
    for a, b in grid.edges:
        da = grid_distance(topo, c, topo.node(a))
        db = grid_distance(topo, c, topo.node(b))
        lo, hi = sorted((da, db))
        labels.append(f"d{lo}-{hi}")
    return labels


def cmd_single_node(cfg: ExperimentConfig, out: str | None = None) -> dict:
    """Bias the centre node of a small grid and ground every other source."""
    out = _prepare(cfg, out)
    w, h = cfg.grid.width, cfg.grid.height
    if w < 5 or h < 5:
        raise ValueError("single-node experiment needs at least a 5x5 grid")
    grid = make_grid(cfg, (h, w))
    center = grid.topology.index((h // 2, w // 2))
    bias = np.zeros(grid.n_nodes)
    bias[center] = cfg.image.v_max
    grid = set_bias(grid, bias)

    eq = _Eq()
    traces, final = run(grid, sim_config(cfg), on_record=eq)
    if cfg.run.traces:
        traces.to_csv(out)

    topo = grid.topology
    dist = np.array([grid_distance(topo, topo.node(center), topo.node(n)) for n in range(grid.n_nodes)])
    labels = fuse_classes(grid, center)
    classes = sorted(set(labels), key=lambda s: tuple(int(p) for p in s[1:].split("-")))
    m = np.array(traces.fuse_memristances)
    lab = np.array(labels)
    spread = {}
    rows = []
    for k, t in enumerate(traces.times):
        row = [t]
        for c in classes:
            row.append(float(m[k, lab == c].mean()))
        rows.append(row)
    for c in classes:
        sel = m[:, lab == c]
        spread[c] = float(np.max(sel.max(axis=1) - sel.min(axis=1)))
    write_table(os.path.join(out, "fuse_classes.csv"), ["time"] + classes, rows)
    write_table(
        os.path.join(out, "fuse_class_map.csv"), ["fuse", "node_a", "node_b", "class"],
        [(f, int(a), int(b), labels[f]) for f, (a, b) in enumerate(grid.edges)],
    )

    v = traces.node_voltages[-1]
    metrics = {
        "t_end": traces.times[-1],
        "center_mV": 1e3 * float(v[center]),
        "neighbor_mV": 1e3 * float(v[dist == 1].mean()),
        "peripheral_mV": 1e3 * float(v[dist == 2].mean()),
        "neighbor_spread_mV": 1e3 * float(np.ptp(v[dist == 1])),
        "peripheral_spread_mV": 1e3 * float(np.ptp(v[dist == 2])),
        "center_fuse_spread_ohm": spread.get("d0-1", 0.0),
        "ring1_fuse_max_change_ohm": float(np.max(np.abs(m[:, lab == "d1-1"] - m[0, lab == "d1-1"]), initial=0.0)),
        "ring2_fuse_max_change_ohm": float(np.max(np.abs(m[:, lab == "d2-2"] - m[0, lab == "d2-2"]), initial=0.0)),
        "max_weighted_average_error": eq.worst,
    }
    write_metrics(os.path.join(out, "metrics.csv"), metrics)
    return metrics


def calibrate_mu_v(cfg: ExperimentConfig, target_v: float = 0.0219, lo: float = 1e-14,
                   hi: float = 1e-12, iters: int = 40) -> float:
    """Bisect (in log space) the mobility giving ``target_v`` at the single-node centre.

    The centre voltage rises monotonically with the mobility: faster drift
    isolates the biased node sooner.
    """
    w, h = cfg.grid.width, cfg.grid.height

    def center_voltage(mu_v):
        c = cfg.replace(device={"mu_v": mu_v})
        grid = make_grid(c, (h, w))
        center = grid.topology.index((h // 2, w // 2))
        bias = np.zeros(grid.n_nodes)
        bias[center] = c.image.v_max
        traces, _ = run(set_bias(grid, bias), sim_config(c, record_every=c.sim.t_end or 1.0))
        return traces.node_voltages[-1][center]

    if not center_voltage(lo) < target_v < center_voltage(hi):
        raise ValueError("target voltage not bracketed by the mobility interval")
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if center_voltage(mid) < target_v:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def _frame_writer(directory: str, shape, v_max: float):
    os.makedirs(directory, exist_ok=True)
    count = [0]

    def write(t, grid, v):
        write_pgm(os.path.join(directory, f"frame_{count[0]:04d}.pgm"), read_smoothed(v, v_max, shape))
        count[0] += 1

    return write


def cmd_smooth(cfg: ExperimentConfig, out: str | None = None) -> dict:
    """Smooth the input image, and a noisy copy of it when ``noise.sigma > 0``."""
    out = _prepare(cfg, out)
    img = load_image(cfg)
    write_pgm(os.path.join(out, "input.pgm"), img)
    v_max = cfg.image.v_max
    frames = _frame_writer(os.path.join(out, "frames_clean"), img.shape, v_max) if cfg.run.frames else None
    traces, _, _, eq = simulate_image(cfg, img, on_record=frames)
    if cfg.run.traces:
        traces.to_csv(out, prefix="clean_")
    clean = read_smoothed(traces.node_voltages[-1], v_max, img.shape)
    write_pgm(os.path.join(out, "smoothed_clean.pgm"), clean)
    metrics = {"input_vs_smoothed": intensity_mismatch(img, clean)[0]}

    if cfg.noise.sigma > 0:
        noisy_in = add_gaussian_noise(img, cfg.noise.mu, cfg.noise.sigma, seed=cfg.run.seed)
        write_pgm(os.path.join(out, "noisy.pgm"), noisy_in)
        frames = _frame_writer(os.path.join(out, "frames_noisy"), img.shape, v_max) if cfg.run.frames else None
        traces_n, _, _, eq_n = simulate_image(cfg, noisy_in, on_record=frames)
        noisy = read_smoothed(traces_n.node_voltages[-1], v_max, img.shape)
        write_pgm(os.path.join(out, "smoothed_noisy.pgm"), noisy)
        mismatch, diff = intensity_mismatch(clean, noisy)
        write_pgm(os.path.join(out, "difference.pgm"), diff)
        metrics["input_noise_mismatch"] = intensity_mismatch(img, noisy_in)[0]
        metrics["smoothed_mismatch"] = mismatch
        eq = max(eq, eq_n)
    metrics["max_weighted_average_error"] = eq
    write_metrics(os.path.join(out, "metrics.csv"), metrics)
    return metrics


def cmd_edges(cfg: ExperimentConfig, out: str | None = None) -> dict:
    """Memristive edge map of the input image next to Prewitt and Sobel maps."""
    out = _prepare(cfg, out)
    img = load_image(cfg)
    spec = threshold_spec(cfg)
    traces, final, _, eq = simulate_image(cfg, img)
    edges = detect_edges(final, spec)
    pw = prewitt(img, cfg.baseline.prewitt_threshold)
    sb = sobel(img, cfg.baseline.sobel_threshold)
    write_pgm(os.path.join(out, "input.pgm"), img)
    write_pgm(os.path.join(out, "smoothed.pgm"), read_smoothed(traces.node_voltages[-1], cfg.image.v_max, img.shape))
    write_pbm(os.path.join(out, "edges.pbm"), edges)
    write_pbm(os.path.join(out, "prewitt.pbm"), pw)
    write_pbm(os.path.join(out, "sobel.pbm"), sb)
    metrics = {
        "edge_pixels": int(edges.sum()),
        "iou_prewitt": edge_iou(edges, pw),
        "iou_sobel": edge_iou(edges, sb),
        "max_weighted_average_error": eq,
    }
    write_metrics(os.path.join(out, "metrics.csv"), metrics)
    return metrics


def cmd_light(cfg: ExperimentConfig, out: str | None = None) -> dict:
    """Edge detection under brighter and darker light.

    A light condition multiplies every bias voltage by its gain, so contour
    contrasts grow under bright light and shrink in the dark while the
    relative contrast of the scene is unchanged.

    Mode A reads every condition at ``sim.t_end`` with its own threshold.
    Mode B uses ``light.fixed_threshold`` for all conditions and reports the
    first recorded time each condition's map reaches ``light.iou_target``
    against the nominal map at ``sim.t_end``.  Conditions with gain below 1
    run until ``light.t_max`` so their slower convergence can be observed.
    """
    out = _prepare(cfg, out)
    lc = cfg.light
    img = load_image(cfg)
    write_pgm(os.path.join(out, "input.pgm"), img)
    conditions = {
        "nominal": (1.0, cfg.threshold.m_t),
        "bright": (lc.bright_scale, lc.bright_threshold),
        "dark": (lc.dark_scale, lc.dark_threshold),
    }
    t_ref = cfg.sim.t_end
    fixed = threshold_spec(cfg, lc.fixed_threshold)
    if not isinstance(fixed, FuseMajority):
        raise ValueError("light adaptation uses the fuse-majority scheme")

    maps, at_ref, eq = {}, {}, 0.0
    for name, (gain, m_t) in conditions.items():
        if gain <= 0:
            raise ValueError(f"light gain must be positive, got {gain}")
        lit = cfg.replace(image={"v_max": cfg.image.v_max * gain})
        t_end = t_ref if gain >= 1.0 else max(t_ref, lc.t_max)
        series = []

        def hook(t, grid, v, series=series, name=name, m_t=m_t):
            series.append((t, detect_edges(grid, fixed)))
            if abs(t - t_ref) < 0.5 * cfg.sim.dt:
                at_ref[name] = detect_edges(grid, threshold_spec(cfg, m_t))

        _, _, _, e = simulate_image(lit, img, sim=sim_config(cfg, t_end=t_end, record_every=lc.record_every),
                                    on_record=hook)
        eq = max(eq, e)
        maps[name] = series

    reference = maps["nominal"][-1][1]
    metrics = {}
    curves = {}
    for name in conditions:
        curve = [(t, edge_iou(m, reference)) for t, m in maps[name]]
        curves[name] = curve
        hit = next((k for k, (_, iou) in enumerate(curve) if iou >= lc.iou_target), None)
        metrics[f"t_converge_{name}"] = curve[hit][0] if hit is not None else float("nan")
        if hit is not None:
            write_pbm(os.path.join(out, f"modeB_{name}.pbm"), maps[name][hit][1])
        write_pbm(os.path.join(out, f"modeA_{name}.pbm"), at_ref[name])
        metrics[f"modeA_pixels_{name}"] = int(at_ref[name].sum())
        metrics[f"modeA_iou_{name}"] = edge_iou(at_ref[name], at_ref["nominal"])
    metrics["max_weighted_average_error"] = eq

    times = [t for t, _ in max(curves.values(), key=len)]
    rows = []
    for k, t in enumerate(times):
        row = [t]
        for name in conditions:
            row.append(curves[name][k][1] if k < len(curves[name]) else "")
        rows.append(row)
    write_table(os.path.join(out, "iou_vs_time.csv"), ["time"] + [f"iou_{n}" for n in conditions], rows)
    write_metrics(os.path.join(out, "metrics.csv"), metrics)
    return metrics


def cmd_fault(cfg: ExperimentConfig, out: str | None = None) -> dict:
    """Edge detection and smoothing on faulty grids of both topologies.

    For every topology and yield below 100%, ``fault.seeds`` fault patterns
    (seeds ``run.seed``, ``run.seed + 1``, ...) are simulated; the same seeds
    are used for every topology.  Images are written for the first seed.
    """
    out = _prepare(cfg, out)
    fc = cfg.fault
    img = load_image(cfg)
    spec = threshold_spec(cfg)
    v_max = cfg.image.v_max
    write_pgm(os.path.join(out, "input.pgm"), img)
    rows, metrics, eq = [], {}, 0.0
    for topo in fc.topologies:
        traces, final, _, e = simulate_image(cfg, img, topology=topo)
        eq = max(eq, e)
        ideal_edges = detect_edges(final, spec)
        ideal_smooth = read_smoothed(traces.node_voltages[-1], v_max, img.shape)
        write_pbm(os.path.join(out, f"edges_{topo}_y100.pbm"), ideal_edges)
        write_pgm(os.path.join(out, f"smoothed_{topo}_y100.pgm"), ideal_smooth)
        for y in fc.yields:
            if y >= 1.0:
                continue
            tag = f"{topo}_y{int(round(100 * y))}"
            ious = []
            for k in range(fc.seeds):
                seed = cfg.run.seed + k
                faults = FaultSpec(1.0 - y, (fc.r_on_lo, fc.r_on_hi), (fc.r_off_lo, fc.r_off_hi),
                                   (fc.m_init_lo, fc.m_init_hi), seed=seed)
                traces, final, fmap, e = simulate_image(cfg, img, topology=topo, faults=faults)
                eq = max(eq, e)
                edges = detect_edges(final, spec)
                smooth = read_smoothed(traces.node_voltages[-1], v_max, img.shape)
                iou = edge_iou(edges, ideal_edges)
                mismatch, diff = intensity_mismatch(smooth, ideal_smooth)
                ious.append(iou)
                rows.append((topo, y, seed, iou, mismatch))
                if k == 0:
                    write_pgm(os.path.join(out, f"faultmap_{tag}.pgm"),
                              fmap.node_levels(final, (fc.m_init_lo, fc.m_init_hi)))
                    fmap.to_csv(os.path.join(out, f"faultmap_{tag}.csv"))
                    write_pbm(os.path.join(out, f"edges_{tag}.pbm"), edges)
                    write_pgm(os.path.join(out, f"smoothed_{tag}.pgm"), smooth)
                    write_pgm(os.path.join(out, f"difference_{tag}.pgm"), diff)
            metrics[f"mean_iou_{tag}"] = float(np.mean(ious)) if ious else float("nan")
            metrics[f"min_iou_{tag}"] = float(np.min(ious)) if ious else float("nan")
    metrics["max_weighted_average_error"] = eq
    write_table(os.path.join(out, "iou.csv"), ["topology", "yield", "seed", "iou", "smoothed_mismatch"], rows)
    write_metrics(os.path.join(out, "metrics.csv"), metrics)
    return {"metrics": metrics, "rows": rows}


COMMANDS = {
    "single-node": cmd_single_node,
    "smooth": cmd_smooth,
    "edges": cmd_edges,
    "light": cmd_light,
    "fault": cmd_fault,
}

