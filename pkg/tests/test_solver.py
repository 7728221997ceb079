import numpy as np
import pytest

from memopl.device import MemristorParams, Rectangular
from memopl.grid import Topology, build_grid, inject_faults, FaultSpec, set_bias
from memopl.solver import (
    NumericalDomainError,
    SimConfig,
    advance,
    assemble_system,
    branch_currents,
    run,
    solve_voltages,
    source_power,
    step,
)

from oracle import dense_voltages

FAST = MemristorParams(mu_v=1.36e-13)


def biased(kind="hexagonal", w=4, h=4, seed=0, termination="source", params=FAST):
    g = build_grid(Topology(kind, w, h), params, output_termination=termination)
    rng = np.random.default_rng(seed)
    return set_bias(g, rng.uniform(0, 0.03, g.n_nodes))


@pytest.mark.parametrize("kind", ["hexagonal", "rectangular"])
@pytest.mark.parametrize("termination", ["source", "ground"])
def test_sparse_solve_matches_dense_oracle(kind, termination):
    g = biased(kind, 4, 3, seed=5, termination=termination)
    g, _ = inject_faults(g, FaultSpec(0.5, seed=2))
    v = solve_voltages(assemble_system(g))
    assert np.max(np.abs(v - dense_voltages(g))) <= 1e-10 * np.max(np.abs(v))


def test_matrix_is_symmetric_positive_definite():
    G, _ = assemble_system(biased(w=5, h=5))
    dense = G.toarray()
    assert np.allclose(dense, dense.T)
    assert np.all(np.linalg.eigvalsh(dense) > 0)


def test_kirchhoff_current_law():
    g = biased(w=5, h=4, seed=1)
    v = solve_voltages(assemble_system(g))
    i_fuse, i_out = branch_currents(g, v)
    net = (g.bias - v) / g.series_r - i_out
    net -= np.bincount(g.edges[:, 0], i_fuse, g.n_nodes)
    net += np.bincount(g.edges[:, 1], i_fuse, g.n_nodes)
    assert np.max(np.abs(net)) < 1e-15


def test_power_balance():
    g = biased(w=4, h=4, seed=2)
    v = solve_voltages(assemble_system(g))
    i_fuse, i_out = branch_currents(g, v)
    dissipated = np.sum((g.bias - v) ** 2 / g.series_r)
    dissipated += np.sum(i_fuse**2 * g.fuse_memristances())
    dissipated += np.sum(i_out**2 * (g.output_memristances() + g.output_load))
    assert source_power(g, v) == pytest.approx(dissipated, rel=1e-9)


def test_uniform_bias_is_a_fixed_point():
    g = set_bias(build_grid(Topology("hexagonal", 6, 6), FAST), np.full(36, 0.014))
    traces, final = run(g, SimConfig(dt=0.05, t_end=2.0))
    for v in traces.node_voltages:
        assert np.allclose(v, 0.014, rtol=0, atol=1e-12)
    assert np.allclose(final.fuse_x, g.fuse_x, rtol=0, atol=1e-9)
    assert np.allclose(final.out_x, g.out_x, rtol=0, atol=1e-9)


def test_zero_bias_gives_zero_voltages():
    g = build_grid(Topology("rectangular", 3, 3))
    assert np.all(solve_voltages(assemble_system(g)) == 0)


def test_invalid_branches_raise():
    g = biased()
    bad = g.copy(series_r=np.zeros(g.n_nodes))
    with pytest.raises(NumericalDomainError):
        assemble_system(bad)
    bad = g.copy(fuse_r_on=-g.fuse_r_off, fuse_x=np.ones_like(g.fuse_x))
    with pytest.raises(NumericalDomainError):
        assemble_system(bad)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(dt=0)
    with pytest.raises(ValueError):
        SimConfig(max_dx_per_step=1.5)
    with pytest.raises(ValueError):
        SimConfig(t_end=-1)


def test_recording_schedule():
    g = biased(w=3, h=3)
    traces, _ = run(g, SimConfig(dt=0.1, t_end=1.05, record_every=0.5))
    assert traces.times == pytest.approx([0.0, 0.5, 1.0, 1.05])
    traces, _ = run(g, SimConfig(dt=0.1, t_end=0.0))
    assert traces.times == [0.0]


def test_recorded_voltages_match_recorded_states():
    g = biased(w=4, h=4, seed=9)
    seen = []
    traces, _ = run(g, SimConfig(dt=0.05, t_end=1.0, record_every=0.25),
                    on_record=lambda t, grid, v: seen.append(np.max(np.abs(v - dense_voltages(grid)))))
    assert len(seen) == len(traces)
    assert max(seen) < 1e-12


def test_substepping_tracks_fine_steps():
    """A coarse step whose state change is split must agree with many fine steps."""
    g = biased(w=3, h=3, seed=4, params=MemristorParams(mu_v=1e-11))
    v = solve_voltages(assemble_system(g))
    coarse = advance(g, v, 0.5, max_dx=0.001)
    fine = g
    for _ in range(2000):
        fine = advance(fine, v, 0.5 / 2000, max_dx=1.0)
    assert np.max(np.abs(coarse.fuse_x - fine.fuse_x)) < 1e-3
    assert np.max(np.abs(coarse.fuse_x - g.fuse_x)) > 1e-2


def test_step_returns_driving_voltages():
    g = biased(w=3, h=3)
    after, v = step(g, SimConfig(dt=0.1))
    assert np.allclose(v, dense_voltages(g), atol=1e-14)
    assert not np.array_equal(after.fuse_x, g.fuse_x)


def test_rectangular_window_conserves_fuse_totals_in_a_grid():
    params = MemristorParams(mu_v=1e-17, window=Rectangular())
    g = biased(w=4, h=4, seed=3, params=params)
    traces, _ = run(g, SimConfig(dt=0.1, t_end=5.0))
    m = np.array(traces.fuse_memristances)
    assert np.max(np.abs(m - m[0])) < 1e-9 * 400


def test_trace_csv(tmp_path):
    g = biased(w=3, h=3)
    traces, _ = run(g, SimConfig(dt=0.1, t_end=0.3, record_every=0.1))
    paths = traces.to_csv(tmp_path, prefix="x_")
    assert [p.split("/")[-1] for p in paths] == ["x_node_voltages.csv", "x_fuse_memristances.csv",
                                                 "x_output_memristances.csv"]
    lines = open(paths[1]).read().splitlines()
    assert lines[0].split(",")[:3] == ["time", "fuse0", "fuse1"]
    assert len(lines) == len(traces) + 1
    assert len(lines[1].split(",")) == g.n_fuses + 1


def test_iterative_path_matches_direct_solve():
    import scipy.sparse.linalg as spla
    from memopl.solver import DIRECT_SOLVE_MAX

    g = biased(w=30, h=30, seed=8)
    g, _ = inject_faults(g, FaultSpec(0.5, seed=8))
    assert g.n_nodes > DIRECT_SOLVE_MAX
    G, b = assemble_system(g)
    v = solve_voltages((G, b), linear_tol=1e-12)
    exact = spla.spsolve(G.tocsc(), b)
    assert np.max(np.abs(v - exact)) <= 1e-10 * np.max(np.abs(exact))
    # a warm start from the answer returns immediately with the same accuracy
    assert np.max(np.abs(solve_voltages((G, b), 1e-12, x0=exact) - exact)) <= 1e-12
