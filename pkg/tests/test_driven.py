import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsqubit import atom, driven
from fsqubit.units import TWO_PI


def test_drive_field_validation():
    with pytest.raises(driven.ModelError):
        driven.DriveField((0, 1), -1.0, 0.0)
    with pytest.raises(driven.ModelError):
        driven.DriveField((2, 2), 1.0, 0.0)


def test_raman_config_detunings(lam):
    cfg = driven.raman_config(lam, 1.0, 2.0, delta_one=10.0, delta_two=3.0)
    assert cfg.delta_one == 10.0
    assert cfg.delta_two == pytest.approx(3.0)
    assert cfg.down.detuning == pytest.approx(7.0)


def test_lambda_hamiltonian_structure(lam, table):
    cfg = driven.raman_config(lam, TWO_PI * 1e6, TWO_PI * 2e6, -TWO_PI * 1e9, TWO_PI * 1e3)
    m = driven.build_lambda_model(cfg, lam, table, mode="closed")
    h = m.hamiltonian
    assert h[0, 0] == 0.0
    assert h[1, 1] == pytest.approx(TWO_PI * 1e9)
    assert h[2, 2] == pytest.approx(-TWO_PI * 1e3)
    assert h[0, 1] == pytest.approx(TWO_PI * 0.5e6)
    assert h[1, 2] == pytest.approx(TWO_PI * 1e6)


def test_hermiticity_exact(lam, table):
    cfg = driven.raman_config(lam, TWO_PI * 36e6, TWO_PI * 36e6, -TWO_PI * 6e9,
                              phase_up=0.7, phase_down=-1.2)
    for mode in ("closed", "lossy"):
        m = driven.build_lambda_model(cfg, lam, table, mode=mode)
        assert np.array_equal(m.hamiltonian, m.hamiltonian.conj().T)
        assert np.linalg.norm(m.hamiltonian - m.hamiltonian.conj().T) == 0.0


def test_full_model_hermitian_at_main_working_point(full_scheme, table, env):
    cfg = driven.raman_config(full_scheme, TWO_PI * 36e6, TWO_PI * 36e6, -TWO_PI * 6e9)
    m = driven.build_lambda_model(cfg, full_scheme, table, env, mode="full")
    assert m.dim == 13
    defect = np.linalg.norm(m.hamiltonian - m.hamiltonian.conj().T)
    assert defect < 1e-12 * np.linalg.norm(m.hamiltonian)


def test_resonant_coupling_block_eigenvalues(lam, table):
    w_up, w_dn = TWO_PI * 1.3e6, TWO_PI * 0.6e6
    cfg = driven.raman_config(lam, w_up, w_dn, 0.0, 0.0)
    m = driven.build_lambda_model(cfg, lam, table, mode="closed")
    eig = np.sort(np.linalg.eigvalsh(m.hamiltonian))
    expected = math.sqrt(w_up**2 + w_dn**2) / 2.0
    np.testing.assert_allclose(eig, [-expected, 0.0, expected], atol=1e-6 * expected)


def test_zero_drive_is_diagonal(lam, table):
    cfg = driven.raman_config(lam, 0.0, 0.0, 0.0)
    m = driven.build_lambda_model(cfg, lam, table, mode="lossy")
    assert np.count_nonzero(m.hamiltonian - np.diag(np.diag(m.hamiltonian))) == 0


def test_collapse_ops_single_element(lam, full_scheme, table, env):
    cfg = driven.raman_config(lam, TWO_PI * 1e6, TWO_PI * 1e6, 0.0)
    m = driven.build_lambda_model(cfg, lam, table, mode="lossy")
    for c in m.collapse_ops:
        assert np.count_nonzero(c) == 1
    cfg_full = driven.raman_config(full_scheme, TWO_PI * 1e6, TWO_PI * 1e6, 0.0)
    m_full = driven.build_lambda_model(cfg_full, full_scheme, table, env, mode="full")
    for c in m_full.collapse_ops:
        assert np.count_nonzero(c) == 1


def test_lossy_branching_rates(lam, table):
    cfg = driven.raman_config(lam, TWO_PI * 1e6, TWO_PI * 1e6, 0.0)
    m = driven.build_lambda_model(cfg, lam, table, mode="lossy")
    rates = sorted(float(np.abs(c).max()) ** 2 for c in m.collapse_ops)
    branch = table.branching(("3S1", 0))
    b_up = branch[("3P2", 0)]
    b_down = branch[("3P0", 0)]
    b_lost = sum(branch.values()) - b_up - b_down
    expected = sorted(f * table.gamma_s for f in (b_up, b_down, b_lost))
    np.testing.assert_allclose(rates, expected, rtol=1e-9)
    # the reference branching aggregates hold at their stated precision
    np.testing.assert_allclose(sorted((b_up, b_down, b_lost)),
                               sorted((0.217, 0.116, 0.666)), atol=5e-4)


def test_forbidden_transition_rejected(full_scheme, table):
    # 1S0 - 3P0 is J=0 to J=0
    field = driven.DriveField((full_scheme.g, full_scheme.down), 1.0, 0.0)
    with pytest.raises(driven.ModelError):
        driven.build_single_drive_model(field, full_scheme, table)


def test_quadrupole_pair_allowed_for_state_prep(table):
    two = atom.two_level_scheme()
    field = driven.DriveField((0, 1), TWO_PI * 173.0, 0.0)
    m = driven.build_single_drive_model(field, two, None)
    assert m.dim == 2
    assert m.hamiltonian[0, 1] == pytest.approx(TWO_PI * 173.0 / 2)


def test_zero_amplitude_field_is_pure_decay(full_scheme, table, env):
    field = driven.DriveField((full_scheme.up, full_scheme.s), 0.0, -TWO_PI * 6e9)
    m = driven.build_single_drive_model(field, full_scheme, table, env)
    off_diag = m.hamiltonian - np.diag(np.diag(m.hamiltonian))
    assert np.count_nonzero(off_diag) == 0
    assert len(m.collapse_ops) == len(atom.decay_rates(full_scheme, table))


def test_single_drive_full_scheme_couplings(full_scheme, table, env):
    field = driven.DriveField((full_scheme.up, full_scheme.s), TWO_PI * 36e6, -TWO_PI * 6e9)
    m = driven.build_single_drive_model(field, full_scheme, table, env)
    up_m1 = full_scheme.index("3P2", 1)
    s_m1 = full_scheme.index("3S1", 1)
    ratio = abs(m.hamiltonian[up_m1, s_m1]) / abs(m.hamiltonian[full_scheme.up, full_scheme.s])
    assert ratio == pytest.approx(math.sqrt(0.3 / 0.4), rel=1e-9)
    # m = +-2 sublevels are dark to the pi-polarized drive
    up_m2 = full_scheme.index("3P2", 2)
    assert np.count_nonzero(m.hamiltonian[up_m2, :]) == 1  # diagonal only


def test_full_model_diagonal_entries(full_scheme, table, env):
    delta = -TWO_PI * 6e9
    cfg = driven.raman_config(full_scheme, TWO_PI * 36e6, TWO_PI * 36e6, delta, TWO_PI * 5e3)
    m = driven.build_lambda_model(cfg, full_scheme, table, env, mode="full")
    h = m.hamiltonian
    assert h[full_scheme.up, full_scheme.up] == 0.0
    assert h[full_scheme.s, full_scheme.s].real == pytest.approx(-delta, rel=1e-12)
    assert h[full_scheme.down, full_scheme.down].real == pytest.approx(-TWO_PI * 5e3)
    z = atom.zeeman_shift(full_scheme.levels[full_scheme.index("3P2", 2)], env)
    assert h[full_scheme.index("3P2", 2), full_scheme.index("3P2", 2)].real == pytest.approx(z)


def test_effective_model_parameters(fig3_config, table):
    m = driven.build_effective_qubit_model(fig3_config, table)
    assert m.labels == ("up", "down", "lost")
    coupling = abs(m.hamiltonian[0, 1]) * 2
    assert coupling == pytest.approx(TWO_PI * 108e3, rel=1e-9)
    # balanced fields: no differential light shift
    assert (m.hamiltonian[0, 0] - m.hamiltonian[1, 1]).real == pytest.approx(0.0, abs=1e-6)


def test_phase_enters_off_diagonal(lam, table):
    cfg = driven.raman_config(lam, TWO_PI * 1e6, TWO_PI * 1e6, -TWO_PI * 1e9,
                              phase_up=0.9)
    m = driven.build_effective_qubit_model(cfg, table)
    coupling = m.hamiltonian[0, 1]
    # red detuning makes the signed coupling negative: phase 0.9 plus pi
    assert coupling == pytest.approx(abs(coupling) * np.exp(1j * (0.9 + math.pi)))


@given(phase=st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
def test_phase_covariance_conjugates_coupling(phase):
    lam_local = atom.lambda_scheme()
    tab = atom.default_decay_table()
    cfg0 = driven.raman_config(lam_local, TWO_PI * 1e6, TWO_PI * 1e6, 0.0)
    cfg1 = driven.raman_config(lam_local, TWO_PI * 1e6, TWO_PI * 1e6, 0.0, phase_up=phase)
    m0 = driven.build_lambda_model(cfg0, lam_local, tab, mode="closed")
    m1 = driven.build_lambda_model(cfg1, lam_local, tab, mode="closed")
    assert m1.hamiltonian[0, 1] == pytest.approx(m0.hamiltonian[0, 1] * np.exp(1j * phase))
    assert m1.hamiltonian[1, 0] == pytest.approx(np.conj(m1.hamiltonian[0, 1]))


def test_elimination_threshold(fig3_config, table, lam):
    assert driven.elimination_applies(fig3_config, table)
    near = driven.raman_config(lam, TWO_PI * 36e6, TWO_PI * 36e6, -TWO_PI * 1e9)
    assert not driven.elimination_applies(near, table)


def test_models_are_immutable(fig3_config, table):
    m = driven.build_effective_qubit_model(fig3_config, table)
    with pytest.raises(ValueError):
        m.hamiltonian[0, 0] = 1.0
