import math

import numpy as np
import pytest

from fsqubit import atom, driven, lindblad
from fsqubit.lindblad import DensityMatrix, Trajectory, evolve, scan, steady_state, trace_distance
from fsqubit.units import TWO_PI


def two_level_model(rabi, detuning=0.0, gamma=0.0):
    scheme = atom.two_level_scheme()
    field = driven.DriveField((0, 1), rabi, detuning)
    model = driven.build_single_drive_model(field, scheme, None)
    if gamma > 0:
        c = np.zeros((2, 2), complex)
        c[0, 1] = math.sqrt(gamma)
        model = driven.RotatingFrameModel(model.hamiltonian, (c,), model.labels, scheme)
    return model


def test_identity_evolution():
    model = driven.RotatingFrameModel(np.zeros((3, 3)), (), ("a", "b", "c"), None)
    rho0 = DensityMatrix.from_state([0.6, 0.8j, 0.0])
    traj = evolve(model, rho0, duration=1e-3, n_samples=11, store_states=True)
    for st in traj.states:
        assert trace_distance(st, rho0) < 1e-12


@pytest.mark.parametrize("engine", ["expm", "rk"])
def test_resonant_rabi_formula(engine):
    rabi = TWO_PI * 1e5
    model = two_level_model(rabi)
    duration = 2 * math.pi / rabi  # one full cycle; passes through the pi point
    traj = evolve(model, DensityMatrix.pure(2, 0), duration, n_samples=81, engine=engine)
    expected = np.sin(rabi * traj.times / 2.0) ** 2
    assert np.abs(traj.populations["up"] - expected).max() < 1e-6


def test_pure_decay_efold(table):
    gamma = table.gamma_s
    model = two_level_model(0.0, gamma=gamma)
    traj = evolve(model, DensityMatrix.pure(2, 1), duration=1.0 / gamma, n_samples=5)
    assert traj.populations["up"][-1] == pytest.approx(1.0 / math.e, rel=1e-9)
    assert 1.0 / gamma == pytest.approx(14.5e-9, rel=0.01)


def test_trace_preservation_and_positivity(fig3_config, table):
    model = driven.build_effective_qubit_model(fig3_config, table)
    traj = evolve(model, DensityMatrix.pure(3, 0), duration=1e-3, n_samples=64,
                  store_states=True)
    for st in traj.states:
        assert abs(np.trace(st.matrix).real - 1.0) < 1e-8
        assert st.min_eigenvalue() > -1e-9
        assert st.hermiticity_defect() < 1e-9


def test_rk_trace_drift_per_ms(fig3_config, table):
    model = driven.build_effective_qubit_model(fig3_config, table)
    traj = evolve(model, DensityMatrix.pure(3, 0), duration=1e-3, n_samples=8, engine="rk")
    pops = np.array([traj.populations[k] for k in model.labels]).sum(axis=0)
    assert abs(pops[-1] - 1.0) < 1e-8


def test_gauge_invariance(fig3_config, table):
    model = driven.build_effective_qubit_model(fig3_config, table)
    shifted = model.shifted(TWO_PI * 123e6)
    for engine in ("expm", "rk"):
        a = evolve(model, DensityMatrix.pure(3, 0), 20e-6, n_samples=21, engine=engine)
        b = evolve(shifted, DensityMatrix.pure(3, 0), 20e-6, n_samples=21, engine=engine)
        for k in model.labels:
            assert np.abs(a.populations[k] - b.populations[k]).max() < 1e-9


def test_convergence_with_tolerance():
    # adaptive integrator error scales with the requested tolerance
    model = two_level_model(TWO_PI * 1e5, detuning=TWO_PI * 3e4, gamma=2e4)
    rho0 = DensityMatrix.pure(2, 0)
    duration = 50e-6
    ref = evolve(model, rho0, duration, n_samples=11, engine="rk", rtol=1e-12, atol=1e-14)
    errors = []
    tols = np.array([1e-5, 1e-6, 1e-7, 1e-8])
    for tol in tols:
        t = evolve(model, rho0, duration, n_samples=11, engine="rk", rtol=tol, atol=1e-14)
        errors.append(np.abs(t.populations["up"] - ref.populations["up"]).max())
    slope = np.polyfit(np.log10(tols), np.log10(errors), 1)[0]
    assert 0.5 <= slope <= 1.5


def test_expm_matches_rk(fig3_config, table):
    model = driven.build_effective_qubit_model(fig3_config, table)
    a = evolve(model, DensityMatrix.pure(3, 0), 50e-6, n_samples=26, engine="expm")
    b = evolve(model, DensityMatrix.pure(3, 0), 50e-6, n_samples=26, engine="rk",
               rtol=1e-11, atol=1e-13)
    for k in model.labels:
        assert np.abs(a.populations[k] - b.populations[k]).max() < 1e-8


def test_steady_state_two_level_formula():
    rabi, det, gamma = TWO_PI * 2e6, TWO_PI * 1e6, TWO_PI * 1.5e6
    model = two_level_model(rabi, detuning=det, gamma=gamma)
    rho = steady_state(model)
    # independent closed-form solution of the driven-damped two-level system
    expected = (rabi**2 / 4.0) / (det**2 + rabi**2 / 2.0 + gamma**2 / 4.0)
    assert rho.population(1) == pytest.approx(expected, rel=1e-9)


def test_steady_state_no_drive_is_ground():
    model = two_level_model(0.0, gamma=1e6)
    rho = steady_state(model)
    assert rho.population(0) == pytest.approx(1.0, abs=1e-12)


def test_steady_state_dark_state(lam, table):
    cfg = driven.raman_config(lam, TWO_PI * 50e3, TWO_PI * 80e3, 0.0, 0.0)
    model = driven.build_lambda_model(cfg, lam, table, mode="closed")
    rho = steady_state(model)
    assert rho.population(model.index("s")) < 1e-10


def test_steady_state_degenerate_rejected():
    # no coupling at all: every diagonal state is stationary
    model = driven.RotatingFrameModel(np.zeros((2, 2)), (), ("a", "b"), None)
    with pytest.raises(lindblad.DegenerateSteadyStateError):
        steady_state(model)


def test_steady_state_matches_long_time_evolution():
    rabi, gamma = TWO_PI * 2e6, TWO_PI * 1e6
    model = two_level_model(rabi, detuning=TWO_PI * 0.3e6, gamma=gamma)
    rho_ss = steady_state(model)
    horizon = 50.0 / min(gamma, rabi)
    traj = evolve(model, DensityMatrix.pure(2, 0), horizon, n_samples=3, store_states=True)
    assert trace_distance(traj.states[-1], rho_ss) < 1e-6


def test_scan_singleton_equals_direct_call():
    def factory(det):
        return two_level_model(TWO_PI * 1e6, detuning=det, gamma=TWO_PI * 2e6)

    vals = scan(factory, [TWO_PI * 0.5e6], observable="up", protocol="steady")
    direct = steady_state(factory(TWO_PI * 0.5e6)).population(1)
    assert vals[0] == pytest.approx(direct, rel=1e-12)


def test_scan_worker_independence():
    def factory(det):
        return two_level_model(TWO_PI * 1e6, detuning=det, gamma=TWO_PI * 2e6)

    grid = list(np.linspace(-TWO_PI * 2e6, TWO_PI * 2e6, 9))
    a = scan(factory, grid, observable="up", protocol="steady", workers=1)
    b = scan(factory, grid, observable="up", protocol="steady", workers=4)
    assert np.array_equal(a, b)


def test_scan_empty_grid_rejected():
    with pytest.raises(ValueError):
        scan(lambda d: two_level_model(1.0), [], observable="up")


def test_scan_error_names_offending_point():
    def factory(det):
        if det > 0:
            raise ValueError("boom")
        return two_level_model(TWO_PI * 1e6, detuning=det, gamma=TWO_PI * 1e6)

    with pytest.raises(lindblad.IntegrationError) as err:
        scan(factory, [-1.0, 1.0], observable="up", protocol="steady")
    assert "1.0" in str(err.value)


def test_trajectory_csv_roundtrip(fig3_config, table):
    model = driven.build_effective_qubit_model(fig3_config, table)
    traj = evolve(model, DensityMatrix.pure(3, 0), 20e-6, n_samples=17)
    text = traj.to_csv()
    back = Trajectory.from_csv(text)
    assert np.array_equal(back.times, traj.times)
    for k in traj.populations:
        assert np.array_equal(back.populations[k], traj.populations[k])
    assert text.splitlines()[0] == "t_s,up,down,lost"


def test_density_matrix_validation():
    good = DensityMatrix.pure(2, 0)
    good.validate()
    bad = DensityMatrix(np.array([[0.5, 0.0], [0.0, 0.6]], dtype=complex))
    with pytest.raises(lindblad.IntegrationError):
        bad.validate()


def test_expm_rejects_ramp():
    model = two_level_model(TWO_PI * 100.0)
    with pytest.raises(lindblad.IntegrationError):
        evolve(model, DensityMatrix.pure(2, 0), 1e-3, engine="expm",
               ramp=lindblad.DetuningRamp(level=1, start=0.0, stop=1.0))
