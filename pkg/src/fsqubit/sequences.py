"""Pulse sequences and canonical experiment protocols.

Declarative segments (drive, dark, phase jump, frequency ramp) run on the
master-equation engine, with an ensemble layer for quasi-static Rabi and
detuning inhomogeneity on top.  Far-detuned Raman segments run on the
adiabatically eliminated qubit model unless full integration is forced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from . import dsp, formulas
from .atom import DecayTable, LevelScheme, MagneticEnvironment
from .driven import (
    DriveField,
    ModelError,
    RamanConfig,
    RotatingFrameModel,
    build_effective_qubit_model,
    build_lambda_model,
    build_single_drive_model,
    elimination_applies,
    raman_config,
)
from .lindblad import DensityMatrix, DetuningRamp, Trajectory, evolve, liouvillian, steady_state
from .parallel import parallel_map
from .units import TWO_PI


# ---------------------------------------------------------------- segments

@dataclass(frozen=True)
class ConstantDrive:
    drive: RamanConfig | DriveField
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment durations must be >= 0")


@dataclass(frozen=True)
class FrequencyRamp:
    field: DriveField
    detuning_start: float
    detuning_stop: float
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment durations must be >= 0")


@dataclass(frozen=True)
class Dark:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment durations must be >= 0")


@dataclass(frozen=True)
class PhaseJump:
    field_id: str  # "up" or "down"
    dphase: float

    @property
    def duration(self) -> float:
        return 0.0


Segment = ConstantDrive | FrequencyRamp | Dark | PhaseJump


@dataclass(frozen=True)
class PulseSequence:
    initial_state: str
    segments: tuple[Segment, ...]
    readout: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a pulse sequence needs at least one segment")

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)


@dataclass(frozen=True)
class RunResult:
    trajectory: Trajectory
    final_state: DensityMatrix


# ------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class EnsembleSpec:
    """Quasi-static shot-to-shot inhomogeneity: a Gaussian fractional scale
    on the two-photon Rabi frequency plus a Gaussian two-photon detuning
    offset, drawn per ensemble member from a counter-based generator.

    sampling "gaussian" draws random members (bit-reproducible under the
    seed); "hermite" replaces the draws by Gauss-Hermite quadrature nodes
    with matching weights, removing Monte-Carlo error from the average."""

    rabi_spread: float = 0.0
    delta_sigma: float = 0.0
    samples: int = 1
    seed: int = 0
    sampling: str = "gaussian"

    def __post_init__(self):
        if self.rabi_spread < 0 or self.delta_sigma < 0:
            raise ValueError("spreads must be >= 0")
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if self.sampling not in ("gaussian", "hermite"):
            raise ValueError("sampling must be 'gaussian' or 'hermite'")


@dataclass(frozen=True)
class OUNoise:
    """Ornstein-Uhlenbeck two-photon detuning noise during dark segments."""

    sigma: float   # rad/s
    tau_c: float   # s

    def __post_init__(self):
        if self.sigma < 0 or self.tau_c <= 0:
            raise ValueError("need sigma >= 0 and tau_c > 0")


def member_rng(spec: EnsembleSpec, member: int) -> np.random.Generator:
    """Independent per-member stream; reproducible for any execution order."""
    key = np.array([spec.seed & 0xFFFFFFFFFFFFFFFF, member], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def member_draws(spec: EnsembleSpec) -> np.ndarray:
    """Per-member (rabi scale, delta offset) pairs."""
    return _draws_and_weights(spec)[0]


def member_weights(spec: EnsembleSpec) -> np.ndarray:
    """Averaging weights matching member_draws (uniform for random draws)."""
    return _draws_and_weights(spec)[1]


def _draws_and_weights(spec: EnsembleSpec, collapse: bool = True) -> tuple[np.ndarray, np.ndarray]:
    if spec.rabi_spread == 0.0 and spec.delta_sigma == 0.0:
        if collapse:
            # all members coincide; collapse to one so the average is
            # bit-equal to a single run regardless of the sample count
            return np.array([[1.0, 0.0]]), np.array([1.0])
        draws = np.tile([1.0, 0.0], (spec.samples, 1))
        return draws, np.full(spec.samples, 1.0 / spec.samples)
    if spec.sampling == "gaussian":
        draws = np.empty((spec.samples, 2))
        for i in range(spec.samples):
            rng = member_rng(spec, i)
            draws[i, 0] = 1.0 + spec.rabi_spread * rng.standard_normal()
            draws[i, 1] = spec.delta_sigma * rng.standard_normal()
        return draws, np.full(spec.samples, 1.0 / spec.samples)
    nodes, w = np.polynomial.hermite_e.hermegauss(spec.samples)
    w = w / w.sum()
    axes = []
    if spec.rabi_spread > 0:
        axes.append((1.0 + spec.rabi_spread * nodes, w))
    if spec.delta_sigma > 0:
        axes.append((spec.delta_sigma * nodes, w))
    if not axes:
        return np.array([[1.0, 0.0]]), np.array([1.0])
    if len(axes) == 1:
        vals, ww = axes[0]
        draws = np.column_stack([vals, np.zeros_like(vals)]) if spec.rabi_spread > 0 \
            else np.column_stack([np.ones_like(vals), vals])
        return draws, ww
    scale_v, scale_w = axes[0]
    off_v, off_w = axes[1]
    sg, og = np.meshgrid(scale_v, off_v, indexing="ij")
    wg = np.outer(scale_w, off_w)
    return np.column_stack([sg.ravel(), og.ravel()]), wg.ravel()


def scaled_config(config: RamanConfig, scale: float, delta_offset: float) -> RamanConfig:
    """Apply a two-photon Rabi scale and a detuning offset to a drive config.

    The scale multiplies the two-photon Rabi frequency, so each one-photon
    amplitude carries sqrt(scale); the offset shifts the down detuning."""
    root = math.sqrt(max(scale, 0.0))
    up = DriveField(config.up.transition, config.up.rabi * root, config.up.detuning, config.up.phase)
    down = DriveField(
        config.down.transition,
        config.down.rabi * root,
        config.down.detuning - delta_offset,
        config.down.phase,
    )
    return RamanConfig(up=up, down=down)


def _ou_phase(
    rng: np.random.Generator, ou: OUNoise, duration: float, delta0: float | None = None
) -> tuple[float, float]:
    """Accumulated phase of an OU detuning path over one dark interval.

    Returns (phase, final delta) so the path stays continuous across pulses;
    `delta0=None` starts from a stationary draw."""
    delta = ou.sigma * rng.standard_normal() if delta0 is None else delta0
    if duration == 0.0:
        return 0.0, delta
    n = max(8, int(math.ceil(duration / (ou.tau_c / 10.0))))
    dt = duration / n
    decay = math.exp(-dt / ou.tau_c)
    kick = ou.sigma * math.sqrt(1.0 - decay * decay)
    phase = 0.0
    for _ in range(n):
        phase += delta * dt
        delta = delta * decay + kick * rng.standard_normal()
    return phase, delta


# ------------------------------------------------------------ generic run

def pulse_duration(config: RamanConfig, kind: str = "pi", override: float | None = None) -> float:
    """Pi or pi/2 pulse duration from the effective Rabi frequency."""
    if override is not None:
        return override
    rabi = formulas.raman_rabi(config.up.rabi, config.down.rabi, config.delta_one)
    if rabi == 0.0:
        raise ModelError("cannot size a pulse at zero effective Rabi frequency")
    if kind == "pi":
        return math.pi / rabi
    if kind == "pi/2":
        return math.pi / (2.0 * rabi)
    raise ValueError(f"unknown pulse kind {kind!r}")


def _frame_delta(seq: PulseSequence) -> float:
    for seg in seq.segments:
        if isinstance(seg, ConstantDrive) and isinstance(seg.drive, RamanConfig):
            return seg.drive.delta_two
    return 0.0


def _with_phase_offsets(config: RamanConfig, phases: dict[str, float]) -> RamanConfig:
    up = DriveField(config.up.transition, config.up.rabi, config.up.detuning,
                    config.up.phase + phases["up"])
    down = DriveField(config.down.transition, config.down.rabi, config.down.detuning,
                      config.down.phase + phases["down"])
    return RamanConfig(up=up, down=down)


def _choose_basis(seq: PulseSequence, table: DecayTable, force_full: bool) -> str:
    has_ramp = any(isinstance(s, FrequencyRamp) for s in seq.segments)
    drives = [s.drive for s in seq.segments if isinstance(s, ConstantDrive)]
    if has_ramp:
        if drives:
            raise ModelError("frequency ramps cannot be mixed with drive segments")
        return "ramp"
    if any(isinstance(d, DriveField) for d in drives):
        return "single"
    raman = [d for d in drives if isinstance(d, RamanConfig)]
    if raman and not force_full and all(elimination_applies(c, table) for c in raman):
        return "effective"
    return "lossy"


def run(
    seq: PulseSequence,
    scheme: LevelScheme,
    table: DecayTable,
    env: MagneticEnvironment | None = None,
    n_samples: int = 201,
    force_full: bool = False,
    rho0: DensityMatrix | None = None,
) -> RunResult:
    """Run a pulse sequence, sampling populations on a uniform global grid.

    The working basis is fixed for the whole sequence: the eliminated qubit
    basis when every Raman segment is deep in the far-detuned regime,
    otherwise the Lambda basis with an explicit loss state.  The state is
    carried across segment boundaries exactly; grid points falling inside a
    segment are reached with exact partial-step propagators.
    """
    basis = _choose_basis(seq, table, force_full)
    if basis == "ramp":
        return _run_ramp(seq, scheme, table, env, n_samples, rho0)

    def drive_model(segment, phases):
        if isinstance(segment.drive, RamanConfig):
            cfg = _with_phase_offsets(segment.drive, phases)
            if basis == "effective":
                return build_effective_qubit_model(cfg, table)
            return build_lambda_model(cfg, scheme, table, env, mode="lossy")
        return build_single_drive_model(segment.drive, scheme, table, env)

    def dark_model():
        frame = _frame_delta(seq)
        if basis == "effective":
            h = np.diag([0.0, -frame, 0.0]).astype(complex)
            return RotatingFrameModel(h, (), ("up", "down", "lost"), None)
        if basis == "lossy":
            cfg = raman_config(scheme, 0.0, 0.0, 0.0, frame)
            return build_lambda_model(cfg, scheme, table, env, mode="lossy")
        ref = _first_drive(seq).drive
        off = DriveField(ref.transition, 0.0, ref.detuning, ref.phase)
        return build_single_drive_model(off, scheme, table, env)

    first = _first_drive(seq)
    labels = (drive_model(first, {"up": 0.0, "down": 0.0}) if first is not None else dark_model()).labels
    for name in (seq.initial_state, *seq.readout):
        if name not in labels:
            raise ModelError(f"state {name!r} is not in the working basis {labels}")

    dim = len(labels)
    state = rho0.matrix.copy() if rho0 is not None else \
        DensityMatrix.pure(dim, labels.index(seq.initial_state)).matrix.copy()

    total = seq.duration
    if total <= 0:
        raise ValueError("sequence must have positive total duration")
    times = np.linspace(0.0, total, n_samples)
    sampled = np.empty((n_samples, dim))
    sampled[0] = np.diag(state).real

    phases = {"up": 0.0, "down": 0.0}
    t_cursor = 0.0
    next_idx = 1
    for k, seg in enumerate(seq.segments):
        if isinstance(seg, PhaseJump):
            if seg.field_id not in phases:
                raise ModelError(f"unknown field id {seg.field_id!r}")
            phases[seg.field_id] += seg.dphase
            continue
        if seg.duration == 0.0:
            continue
        model = drive_model(seg, phases) if isinstance(seg, ConstantDrive) else dark_model()
        try:
            state, next_idx = _advance(model, state, t_cursor, seg.duration, times, next_idx, sampled)
        except Exception as exc:
            raise type(exc)(f"segment {k} ({type(seg).__name__}): {exc}") from exc
        t_cursor += seg.duration
    traj = Trajectory(times=times, populations={lab: sampled[:, i].copy() for i, lab in enumerate(labels)})
    return RunResult(trajectory=traj, final_state=DensityMatrix(state))


def _first_drive(seq: PulseSequence):
    for seg in seq.segments:
        if isinstance(seg, ConstantDrive):
            return seg
    return None


def _advance(model, state, t_start, duration, times, next_idx, sampled):
    """Propagate one segment, filling grid samples that fall inside it."""
    lv = liouvillian(model)
    vec = state.reshape(-1).copy()
    dim = state.shape[0]
    t_end = t_start + duration
    dt_grid = times[1] - times[0] if len(times) > 1 else duration
    eps = 1e-9 * dt_grid
    step = None
    idx = next_idx
    local = t_start
    while idx < len(times) and times[idx] <= t_end + eps:
        gap = times[idx] - local
        if gap > eps:
            if abs(gap - dt_grid) < eps:
                if step is None:
                    step = expm(lv * dt_grid)
                vec = step @ vec
            else:
                vec = expm(lv * gap) @ vec
        sampled[idx] = np.diag(vec.reshape(dim, dim)).real
        local = times[idx]
        idx += 1
    if t_end - local > eps:
        vec = expm(lv * (t_end - local)) @ vec
    return vec.reshape(dim, dim), idx


def _run_ramp(seq, scheme, table, env, n_samples, rho0):
    if len(seq.segments) != 1:
        raise ModelError("ramp sequences must consist of exactly one FrequencyRamp segment")
    ramp_seg = seq.segments[0]
    field = DriveField(ramp_seg.field.transition, ramp_seg.field.rabi, 0.0, ramp_seg.field.phase)
    model = build_single_drive_model(field, scheme, table, env)
    upper = max(ramp_seg.field.transition, key=lambda i: scheme.levels[i].energy)
    state = rho0 if rho0 is not None else DensityMatrix.pure(model.dim, model.index(seq.initial_state))
    traj = evolve(
        model,
        state,
        ramp_seg.duration,
        n_samples=n_samples,
        engine="rk",
        store_states=True,
        ramp=DetuningRamp(level=model.labels.index(scheme.label(upper)),
                          start=ramp_seg.detuning_start, stop=ramp_seg.detuning_stop),
    )
    final = traj.states[-1]
    slim = Trajectory(times=traj.times, populations=traj.populations)
    return RunResult(trajectory=slim, final_state=final)


# ----------------------------------------------------------- Landau-Zener

@dataclass(frozen=True)
class LZResult:
    fidelity: float
    regime_warning: bool


def landau_zener(
    rabi: float,
    sweep_range_hz: float,
    duration: float,
    steps: int | None = None,
) -> LZResult:
    """Transfer fidelity of a linear sweep symmetric about resonance.

    Propagates the driven two-level state with midpoint-sampled
    piecewise-constant steps (exact within each step) and refines the step
    count until the fidelity changes by less than 2e-5.  The closed-form
    sweep probability is only reached for sweep ranges well beyond the Rabi
    frequency; a warning flag is set when the range is smaller than the
    coupling."""
    if rabi < 0:
        raise ValueError("Rabi frequency must be >= 0")
    if duration <= 0 or sweep_range_hz <= 0:
        raise ValueError("sweep range and duration must be positive")
    warn = TWO_PI * sweep_range_hz < rabi
    if rabi == 0.0:
        return LZResult(fidelity=0.0, regime_warning=warn)
    if steps is not None:
        return LZResult(_lz_sweep(rabi, sweep_range_hz, duration, steps), warn)
    n = max(20_000, int(2 * sweep_range_hz * duration))
    f_prev = _lz_sweep(rabi, sweep_range_hz, duration, n)
    for _ in range(3):
        n *= 2
        f_next = _lz_sweep(rabi, sweep_range_hz, duration, n)
        if abs(f_next - f_prev) < 2e-5:
            return LZResult(f_next, warn)
        f_prev = f_next
    return LZResult(f_prev, warn)


def _lz_sweep(rabi: float, sweep_range_hz: float, duration: float, n: int) -> float:
    dt = duration / n
    t_mid = (np.arange(n) + 0.5) * dt
    det = TWO_PI * sweep_range_hz * (t_mid / duration - 0.5)
    # H = [[0, rabi/2], [rabi/2, -det]]; SU(2) step in closed form
    amag = 0.5 * np.hypot(rabi, det)
    cos_t = np.cos(amag * dt)
    sinc = np.sin(amag * dt) / amag
    az = det / 2.0
    ax = rabi / 2.0
    phase = np.exp(1j * det * dt / 2.0)
    u00 = phase * (cos_t - 1j * sinc * az)
    u01 = phase * (-1j * sinc * ax)
    u11 = phase * (cos_t + 1j * sinc * az)
    a, b = 1.0 + 0.0j, 0.0 + 0.0j
    for k in range(n):
        a, b = u00[k] * a + u01[k] * b, u01[k] * a + u11[k] * b
    return 1.0 - abs(a) ** 2


# ------------------------------------------------- coherence (Ramsey/echo)

def _phase_rotation_vec(dim: int, index: int, phi: float) -> np.ndarray:
    """Diagonal of the vectorized conjugation by diag phase e^{i phi} on one level."""
    d = np.ones(dim, dtype=complex)
    d[index] = np.exp(1j * phi)
    return np.kron(d, d.conj())


@dataclass(frozen=True)
class _CoherenceEngine:
    """Cached propagators for pi/2 and pi pulses of one ensemble member."""

    u_half: np.ndarray
    dim: int
    up_index: int
    down_index: int
    delta_total: float

    def pulse(self, vec: np.ndarray, phase: float, pi: bool = False) -> np.ndarray:
        u = self.u_half
        if phase != 0.0:
            rot = _phase_rotation_vec(self.dim, self.up_index, phase)
            vec = rot.conj() * vec
            vec = u @ vec
            if pi:
                vec = u @ vec
            return rot * vec
        vec = u @ vec
        if pi:
            vec = u @ vec
        return vec

    def dark(self, vec: np.ndarray, duration: float, extra_phase: float = 0.0) -> np.ndarray:
        phi = self.delta_total * duration - extra_phase
        rot = _phase_rotation_vec(self.dim, self.down_index, phi)
        return rot * vec


def _member_engine(config: RamanConfig, table: DecayTable, scale: float,
                   offset: float, t_half: float) -> _CoherenceEngine:
    cfg = scaled_config(config, scale, offset)
    model = build_effective_qubit_model(cfg, table)
    lv = liouvillian(model)
    u_half = expm(lv * t_half)
    return _CoherenceEngine(
        u_half=u_half,
        dim=model.dim,
        up_index=model.index("up"),
        down_index=model.index("down"),
        delta_total=cfg.delta_two,
    )


def ramsey_phase_scan(
    dark_time: float,
    phases,
    config: RamanConfig,
    table: DecayTable,
    ensemble: EnsembleSpec | None = None,
    ou: OUNoise | None = None,
    pulse_override: float | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Population in `up` after pi/2 - dark(T) - pi/2(phase), per phase."""
    return _two_pulse_scan(dark_time, phases, config, table, ensemble, ou,
                           pulse_override, workers, echo=False)


def spin_echo_scan(
    dark_time: float,
    phases,
    config: RamanConfig,
    table: DecayTable,
    ensemble: EnsembleSpec | None = None,
    ou: OUNoise | None = None,
    pulse_override: float | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Ramsey scan with a rephasing pi pulse inserted at T/2."""
    return _two_pulse_scan(dark_time, phases, config, table, ensemble, ou,
                           pulse_override, workers, echo=True)


def _two_pulse_scan(dark_time, phases, config, table, ensemble, ou,
                    pulse_override, workers, echo: bool) -> np.ndarray:
    if not elimination_applies(config, table):
        warnings.warn("coherence scans assume the far-detuned regime",
                      formulas.RegimeWarning, stacklevel=3)
    phases = np.asarray(phases, dtype=float)
    spec = ensemble or EnsembleSpec()
    t_half = pulse_duration(config, "pi/2", pulse_override)
    draws, weights = _draws_and_weights(spec, collapse=(ou is None))

    def one_member(i: int) -> np.ndarray:
        scale, offset = draws[i]
        engine = _member_engine(config, table, scale, offset, t_half)
        rng = member_rng(spec, i + (1 << 20))  # distinct stream for dark noise
        phi1 = phi2 = 0.0
        if ou is not None:
            if echo:
                phi1, delta_mid = _ou_phase(rng, ou, dark_time / 2)
                phi2, _ = _ou_phase(rng, ou, dark_time / 2, delta0=delta_mid)
            else:
                phi1, _ = _ou_phase(rng, ou, dark_time)
        rho0 = DensityMatrix.pure(engine.dim, engine.up_index).matrix.reshape(-1)
        vec = engine.pulse(rho0, 0.0)
        if echo:
            vec = engine.dark(vec, dark_time / 2, extra_phase=-phi1)
            vec = engine.pulse(vec, 0.0, pi=True)
            vec = engine.dark(vec, dark_time / 2, extra_phase=-phi2)
        else:
            vec = engine.dark(vec, dark_time, extra_phase=-phi1)
        out = np.empty(len(phases))
        for j, phi in enumerate(phases):
            final = engine.pulse(vec, phi)
            out[j] = final.reshape(engine.dim, engine.dim)[engine.up_index, engine.up_index].real
        return out

    members = parallel_map(one_member, range(len(draws)), workers=workers)
    return np.average(members, axis=0, weights=weights)


def ramsey_time_scan(
    dark_times,
    config: RamanConfig,
    table: DecayTable,
    ensemble: EnsembleSpec | None = None,
    pulse_override: float | None = None,
    workers: int | None = None,
) -> np.ndarray:
    """Fixed-phase Ramsey fringe vs dark time; oscillates at the two-photon
    detuning (plus any light-shift offsets)."""
    dark_times = np.asarray(dark_times, dtype=float)
    spec = ensemble or EnsembleSpec()
    t_half = pulse_duration(config, "pi/2", pulse_override)
    draws, weights = _draws_and_weights(spec)

    def one_member(i: int) -> np.ndarray:
        scale, offset = draws[i]
        engine = _member_engine(config, table, scale, offset, t_half)
        rho0 = DensityMatrix.pure(engine.dim, engine.up_index).matrix.reshape(-1)
        after_first = engine.pulse(rho0, 0.0)
        out = np.empty(len(dark_times))
        for j, t_dark in enumerate(dark_times):
            vec = engine.dark(after_first, t_dark)
            final = engine.pulse(vec, 0.0)
            out[j] = final.reshape(engine.dim, engine.dim)[engine.up_index, engine.up_index].real
        return out

    members = parallel_map(one_member, range(len(draws)), workers=workers)
    return np.average(members, axis=0, weights=weights)


def ramsey_contrast(populations: np.ndarray, phases) -> float:
    """Fringe contrast from a phase scan via a fixed-frequency sinusoid fit."""
    fit = dsp.fit_sinusoid(np.asarray(phases), populations, mode="phase")
    return float(fit.meta["contrast"])


# -------------------------------------------------------- Autler-Townes

@dataclass(frozen=True)
class ATScanResult:
    powers_mw: np.ndarray
    detunings: np.ndarray
    spectra: np.ndarray              # (n_powers, n_detunings) loss signal
    splittings: tuple[float | None, ...]  # rad/s, None when unresolved
    dressing_rabis: np.ndarray       # rad/s, from the power calibration


def autler_townes_scan(
    powers_mw,
    calibration: float,
    scheme: LevelScheme,
    table: DecayTable,
    probe_rabi: float = TWO_PI * 1.0e6,
    strong: str = "down",
    detunings: np.ndarray | None = None,
    probe_time: float | None = None,
    n_detunings: int = 161,
    workers: int | None = None,
) -> ATScanResult:
    """Probe spectra against a strong resonant dressing field.

    `calibration` maps laser power to the dressing Rabi frequency,
    rad/s per sqrt(mW).  The probe is weak, and the signal is the
    population that decayed out of the Lambda system (the atoms detected
    in the ground state).  Per power column the two dressed resonances
    are fitted and their separation reported; below the natural linewidth
    the doublet is unresolved and the splitting is None.
    """
    if probe_rabi > table.gamma_s / 10.0:
        warnings.warn("probe exceeds gamma_s/10; extraction accuracy degrades",
                      formulas.RegimeWarning, stacklevel=2)
    if strong not in ("up", "down"):
        raise ValueError("strong must be 'up' or 'down'")
    powers_mw = np.asarray(powers_mw, dtype=float)
    rabis = calibration * np.sqrt(powers_mw)
    t_probe = probe_time if probe_time is not None else table.gamma_s / probe_rabi**2

    results = []
    for rabi_s in rabis:
        span = 1.6 * max(rabi_s, table.gamma_s)
        dets = detunings if detunings is not None else np.linspace(-span, span, n_detunings)

        def one(det: float) -> float:
            if strong == "down":
                cfg = raman_config(scheme, probe_rabi, rabi_s, det, det)
                init = "up"
            else:
                cfg = raman_config(scheme, rabi_s, probe_rabi, 0.0, det)
                init = "down"
            model = build_lambda_model(cfg, scheme, table, mode="lossy")
            rho0 = DensityMatrix.pure(4, model.index(init))
            traj = evolve(model, rho0, t_probe, n_samples=2)
            return float(traj.populations["lost"][-1])

        signal = np.array(parallel_map(one, dets, workers=workers))
        results.append((dets, signal))

    splittings = []
    for (dets, signal), rabi_s in zip(results, rabis):
        if rabi_s < table.gamma_s:
            splittings.append(None)
            continue
        splittings.append(_two_peak_separation(dets, signal, rabi_s, table.gamma_s))
    detunings_out = results[0][0]
    spectra = np.vstack([sig for _, sig in results])
    return ATScanResult(
        powers_mw=powers_mw,
        detunings=detunings_out,
        spectra=spectra,
        splittings=tuple(splittings),
        dressing_rabis=rabis,
    )


def _double_lorentzian(x, amp1, c1, amp2, c2, fwhm, offset):
    return (
        amp1 / (1.0 + (2.0 * (x - c1) / fwhm) ** 2)
        + amp2 / (1.0 + (2.0 * (x - c2) / fwhm) ** 2)
        + offset
    )


def _two_peak_separation(dets, signal, rabi_guess, gamma) -> float | None:
    p0 = [signal.max(), -rabi_guess / 2, signal.max(), rabi_guess / 2, gamma, 0.0]
    try:
        fit = dsp.nlls(
            _double_lorentzian, (dets, signal), p0,
            names=("amp1", "c1", "amp2", "c2", "fwhm", "offset"),
        )
    except dsp.FitError:
        return None
    sep = abs(fit.value("c2") - fit.value("c1"))
    if not fit.converged or sep < fit.value("fwhm") / 2:
        return None
    return float(sep)


# ------------------------------------------------------------------- CPT

def cpt_scan(
    rabi_up: float,
    rabi_down: float,
    delta_grid,
    scheme: LevelScheme,
    table: DecayTable,
    delta_one: float = 0.0,
    workers: int | None = None,
) -> np.ndarray:
    """Steady-state excited population vs two-photon detuning.

    With the up laser resonant and weak fields, the spectrum shows the
    dark-resonance dip reaching zero at delta = 0."""
    if max(rabi_up, rabi_down) > table.gamma_s / 5.0:
        warnings.warn("CPT scan assumes weak fields", formulas.RegimeWarning, stacklevel=2)

    def one(delta: float) -> float:
        cfg = raman_config(scheme, rabi_up, rabi_down, delta_one, delta)
        model = build_lambda_model(cfg, scheme, table, mode="closed")
        return steady_state(model).population(model.index("s"))

    return np.array(parallel_map(one, list(delta_grid), workers=workers))


# -------------------------------------------------------- one-photon decay

def scattering_decay(
    field: DriveField,
    times,
    scheme: LevelScheme,
    table: DecayTable,
    env: MagneticEnvironment | None = None,
) -> np.ndarray:
    """Survival N_up(t)/N_up(0) under a single drive on the full scheme.

    Includes optical pumping among the Zeeman sublevels and recycling via
    the intermediate manifold back to the ground state."""
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase")
    env = env or MagneticEnvironment()
    model = build_single_drive_model(field, scheme, table, env)
    lv = liouvillian(model)
    i_up = model.index("up")
    vec = DensityMatrix.pure(model.dim, i_up).matrix.reshape(-1).copy()
    out = np.empty(len(times))
    out[0] = 1.0
    for k in range(1, len(times)):
        vec = expm(lv * (times[k] - times[k - 1])) @ vec
        out[k] = vec.reshape(model.dim, model.dim)[i_up, i_up].real
    return out


# ------------------------------------------------------- ensemble wrapper

def run_rabi_ensemble(
    config: RamanConfig,
    table: DecayTable,
    duration: float,
    n_samples: int,
    ensemble: EnsembleSpec,
    workers: int | None = None,
) -> Trajectory:
    """Ensemble-averaged Rabi trace on the eliminated qubit model."""
    draws, weights = _draws_and_weights(ensemble)
    times = np.linspace(0.0, duration, n_samples)
    dt = times[1] - times[0]

    def one_member(i: int) -> np.ndarray:
        scale, offset = draws[i]
        model = build_effective_qubit_model(scaled_config(config, scale, offset), table)
        lv = liouvillian(model)
        step = expm(lv * dt)
        vec = DensityMatrix.pure(model.dim, model.index("up")).matrix.reshape(-1).copy()
        pops = np.empty((n_samples, model.dim))
        for k in range(n_samples):
            pops[k] = np.diag(vec.reshape(model.dim, model.dim)).real
            vec = step @ vec
        return pops

    stacks = parallel_map(one_member, range(len(draws)), workers=workers)
    mean = np.average(stacks, axis=0, weights=weights)
    labels = ("up", "down", "lost")
    return Trajectory(times=times, populations={lab: mean[:, i] for i, lab in enumerate(labels)})


def ensemble_average(member_fn, spec: EnsembleSpec, workers: int | None = None):
    """Average `member_fn(scale, offset)` over the ensemble draws."""
    draws, weights = _draws_and_weights(spec)

    def one(i: int):
        return np.asarray(member_fn(draws[i, 0], draws[i, 1]))

    return np.average(parallel_map(one, range(len(draws)), workers=workers), axis=0, weights=weights)
