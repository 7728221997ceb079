"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary).  Criteria that the model cannot meet are marked ``xfail(strict=True)``
so they still run in full, still print FAIL, and would break the suite if they
ever started passing unnoticed.
"""
import filecmp
import os

import numpy as np
import pytest

from conftest import record_criterion
from oracle import dense_voltages

from memopl.config import default_config
from memopl.device import FuseState, MemristorParams, Prodromakis, Rectangular, fuse_memristance, fuse_step
from memopl.experiments import cmd_fault, cmd_light, cmd_single_node, cmd_smooth, simulate_image
from memopl.grid import Topology, build_grid, set_bias
from memopl.images import step_image
from memopl.imaging import read_smoothed
from memopl.solver import SimConfig, run

# Tolerances and bounds
EQ_AVERAGE_TOL = 1e-9
CENTER_MV, NEIGHBOR_MV, PERIPHERAL_MV = 21.9, 0.6, 0.4
VOLTAGE_BAND = 0.30
POLARITY_TOL = 1e-12
DRIFT_TOL = 1e-9
ORACLE_TOL = 1e-10
NOISE_MISMATCH_MAX = 0.06
CONTRAST_KEPT = 0.75
LIGHT_RATIO_MIN = 1.5
FAULT_IOU_FLOOR = 0.5
FAULT_IOU_PINNED = 0.55  # measured minimum over seeds 0-4: 0.604


@pytest.fixture(scope="module")
def single_node(tmp_path_factory):
    return cmd_single_node(default_config("single-node"), str(tmp_path_factory.mktemp("single")))


@pytest.fixture(scope="module")
def smooth(tmp_path_factory):
    cfg = default_config("smooth").replace(run={"frames": False})
    return cmd_smooth(cfg, str(tmp_path_factory.mktemp("smooth")))


@pytest.fixture(scope="module")
def step_run():
    cfg = default_config("smooth").replace(grid={"width": 32, "height": 32})
    img = step_image(32, 32, 3, 12)
    traces, _, _, eq = simulate_image(cfg, img)
    return img, read_smoothed(traces.node_voltages[-1], cfg.image.v_max, img.shape), eq


@pytest.fixture(scope="module")
def light(tmp_path_factory):
    return cmd_light(default_config("light"), str(tmp_path_factory.mktemp("light")))


@pytest.fixture(scope="module")
def fault(tmp_path_factory):
    cfg = default_config("fault").replace(fault={"yields": [1.0, 0.5], "seeds": 5})
    return cmd_fault(cfg, str(tmp_path_factory.mktemp("fault")))


def test_c01_weighted_average_identity(single_node, smooth, step_run, light, fault):
    worst = {
        "single-node": single_node["max_weighted_average_error"],
        "smooth": smooth["max_weighted_average_error"],
        "step": step_run[2],
        "light": light["max_weighted_average_error"],
        "fault": fault["metrics"]["max_weighted_average_error"],
    }
    top = max(worst.values())
    ok = top <= EQ_AVERAGE_TOL
    record_criterion(1, "node voltage equals weighted neighbor average", ok,
                     f"worst relative error {top:.2e} over all recorded steps (bound {EQ_AVERAGE_TOL:g})")
    assert ok, worst


def test_c02_single_node_voltages(single_node):
    c, n, p = single_node["center_mV"], single_node["neighbor_mV"], single_node["peripheral_mV"]
    ok = (
        abs(c - CENTER_MV) <= 0.05
        and abs(n - NEIGHBOR_MV) <= VOLTAGE_BAND * NEIGHBOR_MV
        and abs(p - PERIPHERAL_MV) <= VOLTAGE_BAND * PERIPHERAL_MV
    )
    record_criterion(2, "single biased node after 30 s", ok,
                     f"center {c:.3f} mV, neighbor {n:.3f} mV, peripheral {p:.3f} mV")
    assert ok


def test_c03_fuse_polarity_invariance():
    rng = np.random.default_rng(2024)
    worst = 0.0
    windows = [MemristorParams(mu_v=1.36e-13), MemristorParams(mu_v=1.36e-13, window=Prodromakis())]
    for k in range(100):
        params = windows[k % 2]
        x0 = rng.uniform(0.05, 0.95)
        n = 200
        # random smooth-ish waveform: sum of a few random sinusoids plus steps
        t = np.arange(n) * 0.01
        wave = sum(rng.uniform(-1, 1) * np.sin(2 * np.pi * rng.uniform(0.1, 5) * t + rng.uniform(0, 6.3))
                   for _ in range(3))
        wave = wave * rng.uniform(1e-6, 2e-5)
        pos = neg = FuseState.symmetric(params, x0)
        for i in wave:
            pos, neg = fuse_step(pos, i, 0.01), fuse_step(neg, -i, 0.01)
            a, b = fuse_memristance(pos), fuse_memristance(neg)
            worst = max(worst, abs(a - b) / a)
    ok = worst <= POLARITY_TOL
    record_criterion(3, "fuse polarity invariance", ok, f"worst relative gap {worst:.2e} over 100 waveforms")
    assert ok


def test_c04_linear_drift_cancellation():
    params = MemristorParams(mu_v=1.36e-13, window=Rectangular())
    fuse = FuseState.symmetric(params, 0.5)
    m0 = fuse_memristance(fuse)
    worst = 0.0
    interior = True
    for k in range(10_000):
        i = 2e-7 * np.sin(2 * np.pi * k / 997)
        fuse = fuse_step(fuse, i, 0.01)
        interior &= 0.0 < fuse.a.x < 1.0 and 0.0 < fuse.b.x < 1.0
        worst = max(worst, abs(fuse_memristance(fuse) - m0) / m0)
    ok = worst <= DRIFT_TOL and interior
    record_criterion(4, "linear-drift cancellation", ok, f"worst relative change {worst:.2e} over 1e4 steps")
    assert ok


def test_c05_dense_oracle():
    rng = np.random.default_rng(77)
    worst = 0.0
    shapes = [(2, 2), (3, 2), (3, 3), (4, 3), (4, 4)]
    for k in range(20):
        kind = "hexagonal" if k % 2 == 0 else "rectangular"
        w, h = shapes[k % len(shapes)]
        g = build_grid(Topology(kind, w, h), MemristorParams(mu_v=1.36e-12))
        g = set_bias(g, rng.uniform(0, 0.03, g.n_nodes))
        errors = []

        def check(t, grid, v):
            errors.append(np.max(np.abs(v - dense_voltages(grid))) / np.max(np.abs(v)))

        traces, _ = run(g, SimConfig(dt=0.05, t_end=5.0, record_every=0.05), on_record=check)
        assert len(errors) == len(traces) == 101
        worst = max(worst, max(errors))
    ok = worst <= ORACLE_TOL
    record_criterion(5, "sparse solver equals dense inversion", ok,
                     f"worst relative deviation {worst:.2e} over 20 grids x 101 steps")
    assert ok


@pytest.mark.xfail(strict=True, reason="fuses driven by pixel noise switch off and stop smoothing it")
def test_c06_noise_robustness(smooth):
    m = smooth["smoothed_mismatch"]
    ok = m <= NOISE_MISMATCH_MAX
    record_criterion(6, "noise robustness on the cartoon", ok,
                     f"mismatch {m:.4f} (bound {NOISE_MISMATCH_MAX}); noisy input itself {smooth['input_noise_mismatch']:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="finite off resistance leaks one gray level across the step")
def test_c07_edge_preservation(step_run):
    img, out, _ = step_run
    half = img.shape[1] // 2
    regions = (np.s_[:, :half], np.s_[:, half:])
    var_in = [float(img[r].var()) for r in regions]
    var_out = [float(out[r].var()) for r in regions]
    contrast_in = img[regions[1]].mean() - img[regions[0]].mean()
    contrast_out = out[regions[1]].mean() - out[regions[0]].mean()
    kept = contrast_out / contrast_in
    ok = kept >= CONTRAST_KEPT and all(vo <= vi for vo, vi in zip(var_out, var_in))
    record_criterion(7, "edge preservation on a two-region step", ok,
                     f"contrast kept {kept:.3f}, region variance {var_in} -> {[round(v, 4) for v in var_out]}")
    assert ok


def test_c08_light_ordering(light):
    tb, tn, td = light["t_converge_bright"], light["t_converge_nominal"], light["t_converge_dark"]
    ok = tb < tn < td and td / tb >= LIGHT_RATIO_MIN
    record_criterion(8, "light-adaptation convergence order", ok,
                     f"t_bright {tb:.1f} s < t_nominal {tn:.1f} s < t_dark {td:.1f} s, ratio {td / tb:.2f}")
    assert ok


def test_c09_fault_tolerance(fault):
    rows = fault["rows"]
    hexa = {seed: iou for topo, y, seed, iou, _ in rows if topo == "hexagonal" and y == 0.5}
    rect = {seed: iou for topo, y, seed, iou, _ in rows if topo == "rectangular" and y == 0.5}
    assert sorted(hexa) == sorted(rect) and len(hexa) >= 5
    beats = all(hexa[s] > rect[s] for s in hexa)
    floor = min(hexa.values())
    ok = beats and floor >= FAULT_IOU_FLOOR and floor >= FAULT_IOU_PINNED
    record_criterion(9, "fault tolerance at 50% yield", ok,
                     f"hex IoU {np.mean(list(hexa.values())):.3f} (min {floor:.3f}) vs rect "
                     f"{np.mean(list(rect.values())):.3f} over {len(hexa)} seeds")
    assert ok


def _same_tree(a, b):
    files_a = sorted(os.path.relpath(os.path.join(d, f), a) for d, _, fs in os.walk(a) for f in fs)
    files_b = sorted(os.path.relpath(os.path.join(d, f), b) for d, _, fs in os.walk(b) for f in fs)
    if files_a != files_b:
        return False, len(files_a)
    _, mismatch, errors = filecmp.cmpfiles(a, b, files_a, shallow=False)
    return not mismatch and not errors, len(files_a)


def test_c10_determinism(tmp_path):
    small = {"grid": {"width": 16, "height": 16}, "sim": {"t_end": 4.0, "dt": 0.05}}
    results = []
    for name, cmd, extra in [
        ("smooth", cmd_smooth, {}),
        ("fault", cmd_fault, {"fault": {"yields": [1.0, 0.5], "seeds": 2}}),
        ("single-node", cmd_single_node, {"grid": {"width": 5, "height": 5}}),
    ]:
        cfg = default_config(name).replace(**{**small, **extra}, run={"seed": 3})
        cmd(cfg, str(tmp_path / f"{name}_a"))
        cmd(cfg, str(tmp_path / f"{name}_b"))
        results.append(_same_tree(str(tmp_path / f"{name}_a"), str(tmp_path / f"{name}_b")))
    ok = all(same for same, _ in results)
    record_criterion(10, "byte-identical reruns", ok, f"{sum(n for _, n in results)} files compared across 3 experiments")
    assert ok
