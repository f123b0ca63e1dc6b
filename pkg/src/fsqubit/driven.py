"""Rotating-frame Hamiltonians and collapse operators for Raman drives.

Builders return immutable RotatingFrameModel instances.  The Hamiltonian is
assembled from its upper triangle, so Hermiticity holds exactly.  Collapse
operators are single-element jump matrices with the rate folded in as a
square root, one per decay channel, which keeps branching auditable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import formulas
from .atom import (
    DecayTable,
    LevelScheme,
    MagneticEnvironment,
    clebsch_gordan,
    decay_rates,
    zeeman_shift,
)


class ModelError(Exception):
    """Drive configuration incompatible with the level scheme."""


@dataclass(frozen=True)
class DriveField:
    """One laser field coupling a pair of scheme sublevels (pi polarized)."""

    transition: tuple[int, int]  # (lower index, upper index) within a scheme
    rabi: float                  # rad/s, >= 0
    detuning: float              # rad/s
    phase: float = 0.0           # rad

    def __post_init__(self):
        if self.rabi < 0:
            raise ModelError("Rabi frequency must be >= 0")
        if self.transition[0] == self.transition[1]:
            raise ModelError("transition endpoints must be distinct")


@dataclass(frozen=True)
class RamanConfig:
    """Up (3P2-3S1) and down (3S1-3P0) field pair of one Lambda drive."""

    up: DriveField
    down: DriveField

    @property
    def delta_one(self) -> float:
        """One-photon detuning Delta (the up laser's)."""
        return self.up.detuning

    @property
    def delta_two(self) -> float:
        """Two-photon detuning delta = Delta_up - Delta_down."""
        return self.up.detuning - self.down.detuning


def raman_config(
    scheme: LevelScheme,
    rabi_up: float,
    rabi_down: float,
    delta_one: float,
    delta_two: float = 0.0,
    phase_up: float = 0.0,
    phase_down: float = 0.0,
) -> RamanConfig:
    """Convenience constructor wiring the fields onto the scheme's Lambda triple."""
    up = DriveField((scheme.up, scheme.s), rabi_up, delta_one, phase_up)
    down = DriveField((scheme.down, scheme.s), rabi_down, delta_one - delta_two, phase_down)
    return RamanConfig(up=up, down=down)


@dataclass(frozen=True)
class RotatingFrameModel:
    """Hermitian rotating-frame Hamiltonian plus pure jump operators."""

    hamiltonian: np.ndarray
    collapse_ops: tuple[np.ndarray, ...]
    labels: tuple[str, ...]
    scheme: LevelScheme | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        h.setflags(write=False)
        object.__setattr__(self, "hamiltonian", h)
        ops = []
        for c in self.collapse_ops:
            c = np.asarray(c, dtype=complex)
            c.setflags(write=False)
            ops.append(c)
        object.__setattr__(self, "collapse_ops", tuple(ops))
        if not np.array_equal(h, h.conj().T):
            raise ModelError("Hamiltonian must be Hermitian")
        for c in ops:
            if np.count_nonzero(c) != 1:
                raise ModelError("collapse operators must be single-element jumps")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def shifted(self, offset: float) -> "RotatingFrameModel":
        """Same model with a constant added to the Hamiltonian diagonal."""
        h = self.hamiltonian + offset * np.eye(self.dim)
        return RotatingFrameModel(h, self.collapse_ops, self.labels, self.scheme)


def _hermitian(dim: int, entries: dict[tuple[int, int], complex]) -> np.ndarray:
    """Build a Hermitian matrix from diagonal + upper-triangle entries."""
    h = np.zeros((dim, dim), dtype=complex)
    for (i, j), v in entries.items():
        if i == j:
            h[i, i] = v.real
        else:
            h[i, j] = v
            h[j, i] = np.conj(v)
    return h


def _jump(dim: int, to: int, frm: int, rate: float) -> np.ndarray:
    c = np.zeros((dim, dim), dtype=complex)
    c[to, frm] = np.sqrt(rate)
    return c


def transition_allowed(a, b) -> bool:
    """Single-laser coupling selection: pi-polarized dipole transitions,
    plus the (1S0, 3P2) quadrupole line used for state preparation."""
    if a.m_j != b.m_j:
        return False
    pair = {a.manifold, b.manifold}
    if pair == {"1S0", "3P2"}:
        return True
    dj = abs(a.j - b.j)
    if dj > 1 or (a.j == 0 and b.j == 0):
        return False
    # pi coupling J -> J with m = 0 vanishes
    if a.j == b.j and a.m_j == 0:
        return False
    return pair in ({"3P2", "3S1"}, {"3P0", "3S1"}, {"3P1", "3S1"})


def _check_field(field_: DriveField, scheme: LevelScheme) -> None:
    lo, hi = field_.transition
    if not (0 <= lo < scheme.n and 0 <= hi < scheme.n):
        raise ModelError("field transition indices out of range for scheme")
    a, b = scheme.levels[lo], scheme.levels[hi]
    if not transition_allowed(a, b):
        raise ModelError(
            f"drive on ({a.manifold},{a.m_j})-({b.manifold},{b.m_j}) is not an allowed transition"
        )


def build_lambda_model(
    config: RamanConfig,
    scheme: LevelScheme,
    table: DecayTable,
    env: MagneticEnvironment | None = None,
    mode: str = "lossy",
) -> RotatingFrameModel:
    """Rotating-frame model of the driven Lambda system.

    mode "closed": 3x3 on (up, s, down); decay branching renormalized into
    the Lambda so the model is trace-preserving on its own (CPT spectra,
    steady states).  mode "lossy": a fourth `lost` state collects decay out
    of the Lambda.  mode "full": all 13 sublevels with their Zeeman and
    detuning diagonal entries (requires `env`).
    """
    _check_field(config.up, scheme)
    _check_field(config.down, scheme)
    if scheme.levels[config.up.transition[0]].key() != ("3P2", 0):
        raise ModelError("up field must drive (3P2,0)-(3S1,0)")
    if scheme.levels[config.down.transition[0]].key() != ("3P0", 0):
        raise ModelError("down field must drive (3P0,0)-(3S1,0)")

    if mode == "full":
        return _full_model(config, scheme, table, env)
    if mode not in ("closed", "lossy"):
        raise ModelError(f"unknown lambda-model mode {mode!r}")

    # basis (up, s, down) with diagonal (0, -Delta, -delta)
    entries: dict[tuple[int, int], complex] = {
        (1, 1): -config.delta_one,
        (2, 2): -config.delta_two,
        (0, 1): (config.up.rabi / 2.0) * np.exp(1j * config.up.phase),
        (1, 2): (config.down.rabi / 2.0) * np.exp(-1j * config.down.phase),
    }
    branch = table.branching(("3S1", 0))
    b_up = branch.get(("3P2", 0), 0.0)
    b_down = branch.get(("3P0", 0), 0.0)
    if mode == "closed":
        h = _hermitian(3, entries)
        norm = b_up + b_down
        ops = (
            _jump(3, 0, 1, table.gamma_s * b_up / norm),
            _jump(3, 2, 1, table.gamma_s * b_down / norm),
        )
        return RotatingFrameModel(h, ops, ("up", "s", "down"), scheme)
    h = _hermitian(4, entries)
    b_lost = sum(branch.values()) - b_up - b_down
    ops = tuple(
        _jump(4, to, 1, table.gamma_s * b)
        for to, b in ((0, b_up), (2, b_down), (3, b_lost))
        if b > 0.0
    )
    return RotatingFrameModel(h, ops, ("up", "s", "down", "lost"), scheme)


def _pi_coupling_ratio(j_low: int, j_high: int, m: int) -> float:
    """Relative pi-transition amplitude (m -> m) against the m = 0 line."""
    ref = clebsch_gordan(j_low, 0, 1, 0, j_high, 0)
    return clebsch_gordan(j_low, m, 1, 0, j_high, m) / ref


def _full_model(
    config: RamanConfig,
    scheme: LevelScheme,
    table: DecayTable,
    env: MagneticEnvironment | None,
) -> RotatingFrameModel:
    if env is None:
        raise ModelError("the full model needs a MagneticEnvironment")
    if scheme.n != 13:
        raise ModelError("full mode expects the 13-sublevel scheme")
    n = scheme.n
    i_up, i_s, i_down = scheme.up, scheme.s, scheme.down
    entries: dict[tuple[int, int], complex] = {}
    for i, lvl in enumerate(scheme.levels):
        z = zeeman_shift(lvl, env)
        if lvl.manifold == "3S1":
            entries[(i, i)] = -config.delta_one + z
        elif lvl.manifold == "3P0":
            entries[(i, i)] = -config.delta_two
        else:
            # 3P2 Zeeman ladder; spectator manifolds keep their Zeeman offset
            entries[(i, i)] = z
    # up laser couples every (3P2,m)-(3S1,m) pi line it can reach
    for m in (-1, 0, 1):
        lo, hi = scheme.index("3P2", m), scheme.index("3S1", m)
        amp = config.up.rabi * _pi_coupling_ratio(2, 1, m) / 2.0
        entries[(min(lo, hi), max(lo, hi))] = amp * np.exp(1j * config.up.phase)
    lo, hi = i_down, i_s
    entries[(min(lo, hi), max(lo, hi))] = (
        config.down.rabi / 2.0 * np.exp(-1j * config.down.phase)
    )
    h = _hermitian(n, entries)
    ops = tuple(_jump(n, j, i, rate) for i, j, rate in decay_rates(scheme, table))
    labels = tuple(scheme.label(i) for i in range(n))
    return RotatingFrameModel(h, ops, labels, scheme)


def build_single_drive_model(
    field_: DriveField,
    scheme: LevelScheme,
    table: DecayTable | None = None,
    env: MagneticEnvironment | None = None,
) -> RotatingFrameModel:
    """Model with one laser on: the scattering-decay and state-prep settings.

    On the full scheme the pi-polarized field addresses every Zeeman line of
    its manifold pair with Clebsch-Gordan-scaled amplitude and the
    Zeeman-shifted detuning; decay channels come from the table.  On a
    scheme without decay sources (e.g. the 1S0-3P2 pair) this reduces to a
    bare two-level model for sweep simulations.
    """
    _check_field(field_, scheme)
    lo, hi = field_.transition
    low_lvl, high_lvl = scheme.levels[lo], scheme.levels[hi]
    if low_lvl.energy > high_lvl.energy:
        lo, hi = hi, lo
        low_lvl, high_lvl = high_lvl, low_lvl
    n = scheme.n
    entries: dict[tuple[int, int], complex] = {}
    env = env or MagneticEnvironment(b_gauss=0.0)
    z_ref_low = zeeman_shift(low_lvl, env)
    z_ref_high = zeeman_shift(high_lvl, env)
    for i, lvl in enumerate(scheme.levels):
        if lvl.manifold == high_lvl.manifold:
            entries[(i, i)] = -field_.detuning + zeeman_shift(lvl, env) - z_ref_high
        elif lvl.manifold == low_lvl.manifold:
            entries[(i, i)] = zeeman_shift(lvl, env) - z_ref_low
        else:
            entries[(i, i)] = 0.0
    j_lo, j_hi = low_lvl.j, high_lvl.j
    for m in range(-min(j_lo, j_hi), min(j_lo, j_hi) + 1):
        if not (scheme.has(low_lvl.manifold, m) and scheme.has(high_lvl.manifold, m)):
            continue
        a, b = scheme.index(low_lvl.manifold, m), scheme.index(high_lvl.manifold, m)
        ratio = 1.0 if {low_lvl.manifold, high_lvl.manifold} == {"1S0", "3P2"} else _pi_coupling_ratio(j_lo, j_hi, m)
        if ratio == 0.0:
            continue
        amp = field_.rabi * ratio / 2.0
        entries[(min(a, b), max(a, b))] = amp * np.exp(1j * field_.phase)
    h = _hermitian(n, entries)
    ops: tuple[np.ndarray, ...] = ()
    if table is not None:
        ops = tuple(_jump(n, j, i, rate) for i, j, rate in decay_rates(scheme, table))
    labels = tuple(scheme.label(i) for i in range(n))
    return RotatingFrameModel(h, ops, labels, scheme)


def build_effective_qubit_model(
    config: RamanConfig, table: DecayTable
) -> RotatingFrameModel:
    """Adiabatically eliminated qubit model on (up, down, lost).

    Uses the closed-form effective parameters: two-photon coupling, one-photon
    light shifts on the diagonal, and per-state scattering with the table's
    branching back into the qubit or out to `lost`.
    """
    eff = formulas.effective_two_level(
        config.up.rabi, config.down.rabi, config.delta_one, table.gamma_s
    )
    rel_phase = config.up.phase - config.down.phase
    entries = {
        (0, 0): eff.stark_up,
        (1, 1): -config.delta_two + eff.stark_down,
        (0, 1): (_signed_eff_coupling(config) / 2.0) * np.exp(1j * rel_phase),
    }
    h = _hermitian(3, entries)
    branch = table.branching(("3S1", 0))
    b_up = branch.get(("3P2", 0), 0.0)
    b_down = branch.get(("3P0", 0), 0.0)
    b_lost = sum(branch.values()) - b_up - b_down
    ops = []
    for src, rate in ((0, eff.scatter_up), (1, eff.scatter_down)):
        if rate == 0.0:
            continue
        for to, b in ((0, b_up), (1, b_down), (2, b_lost)):
            if b > 0.0:
                ops.append(_jump(3, to, src, rate * b))
    return RotatingFrameModel(h, tuple(ops), ("up", "down", "lost"), None)


def _signed_eff_coupling(config: RamanConfig) -> float:
    return config.up.rabi * config.down.rabi / (2.0 * config.delta_one)


def elimination_applies(config: RamanConfig, table: DecayTable, factor: float = 100.0) -> bool:
    """Whether |Delta| is large enough to eliminate the intermediate state."""
    scales = (config.up.rabi, config.down.rabi, table.gamma_s)
    return abs(config.delta_one) > factor * max(scales)
