"""Signal extraction and curve fitting for oscillation traces.

Implements the damped-Rabi analysis chain (Fourier spectrum, Lorentzian
carrier fit, zero-phase Butterworth band-pass, Hilbert envelope, exponential
envelope fit) plus the general damped least-squares engine behind every fit
in the package.
"""

from __future__ import annotations

import inspect
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.signal import butter, hilbert, sosfilt, sosfiltfilt


class FitError(Exception):
    pass


class DegenerateParameterError(FitError):
    """J^T J is numerically singular; carries the offending parameter pair."""

    def __init__(self, name_a: str, name_b: str):
        self.pair = (name_a, name_b)
        super().__init__(f"parameters {name_a!r} and {name_b!r} are degenerate")


class PipelineError(Exception):
    """A stage of the extraction chain failed; the stage name is included."""


class Measured(NamedTuple):
    value: float
    sigma: float


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled real signal.

    `sigma` holds optional per-sample uncertainties, `valid` an optional
    mask excluding edge-distorted samples from later fits.
    """

    dt: float
    samples: np.ndarray
    sigma: np.ndarray | None = None
    valid: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.samples, dtype=float)
        y.setflags(write=False)
        object.__setattr__(self, "samples", y)
        if self.dt <= 0:
            raise ValueError("sample interval must be positive")

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t_s,value\n")
        for t, v in zip(self.times, self.samples):
            buf.write(f"{t:.17g},{v:.17g}\n")
        return buf.getvalue()

    @classmethod
    def from_xy(cls, t: np.ndarray, y: np.ndarray) -> "Trace":
        t = np.asarray(t, dtype=float)
        diffs = np.diff(t)
        if len(diffs) == 0:
            raise ValueError("need at least two samples")
        dt = float(np.median(diffs))
        if not np.allclose(diffs, dt, rtol=1e-6, atol=1e-12 * abs(dt)):
            raise ValueError("trace sampling is not uniform")
        return cls(dt=dt, samples=np.asarray(y, dtype=float))

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        rows = []
        for ln in text.strip().splitlines():
            ln = ln.strip()
            if not ln or ln[0].isalpha() or ln.startswith("#"):
                continue
            parts = ln.split(",")
            rows.append((float(parts[0]), float(parts[1])))
        arr = np.array(rows)
        return cls.from_xy(arr[:, 0], arr[:, 1])


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    params: np.ndarray
    uncertainties: np.ndarray
    covariance: np.ndarray
    rss: float
    converged: bool
    iterations: int
    meta: dict = field(default_factory=dict)

    def value(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def sigma(self, name: str) -> float:
        return float(self.uncertainties[self.names.index(name)])

    def __getitem__(self, name: str) -> float:
        return self.value(name)


def _numeric_jacobian(fn, x, params, f0):
    p = np.asarray(params, dtype=float)
    jac = np.empty((len(f0), len(p)))
    root_eps = math.sqrt(np.finfo(float).eps)
    for j in range(len(p)):
        # relative step with an absolute floor so near-zero parameters
        # (converged phases, offsets) keep a resolvable step
        h = root_eps * (abs(p[j]) + 1.0)
        stepped = p.copy()
        stepped[j] += h
        jac[:, j] = (fn(x, *stepped) - f0) / h
    return jac


def nlls(
    model_fn: Callable,
    data,
    p0,
    names: tuple[str, ...] | None = None,
    sigma=None,
    max_iterations: int = 200,
    cost_tol: float = 1e-10,
    grad_tol: float = 1e-12,
) -> FitResult:
    """Damped (Levenberg-Marquardt) least squares with numeric Jacobian.

    Parameters
    ----------
    model_fn : callable(x, *params) -> y
    data : Trace or (x, y) pair
    p0 : initial parameter vector (finite)
    names : parameter names; taken from the model signature if omitted
    sigma : per-point uncertainties; when given, the covariance is absolute,
        otherwise it is scaled by the reduced chi-square estimate.

    Converged when the relative cost change drops below `cost_tol` or the
    gradient infinity-norm below `grad_tol`; a max-iteration exit returns
    converged=False.
    """
    if isinstance(data, Trace):
        x, y = data.times, data.samples
        if sigma is None and data.sigma is not None:
            sigma = data.sigma
        if data.valid is not None:
            x, y = x[data.valid], y[data.valid]
            if sigma is not None:
                sigma = np.asarray(sigma)[data.valid]
    else:
        x, y = data
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    if not np.all(np.isfinite(p)):
        raise FitError("initial parameters must be finite")
    if len(y) < len(p) + 1:
        raise FitError(f"need at least {len(p) + 1} points to fit {len(p)} parameters")
    if names is None:
        sig_params = list(inspect.signature(model_fn).parameters)[1:]
        names = tuple(sig_params[: len(p)])
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)

    def residual(params):
        return (y - model_fn(x, *params)) * w

    r = residual(p)
    cost = float(r @ r)
    lam = 1e-3
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        f0 = model_fn(x, *p)
        jac = _numeric_jacobian(model_fn, x, p, f0) * w[:, None]
        jtj = jac.T @ jac
        grad = jac.T @ r
        if float(np.abs(grad).max(initial=0.0)) < grad_tol:
            converged = True
            iterations -= 1
            break
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = 1e-30
        accepted = False
        for _ in range(50):
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + step
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                rel_drop = (cost - cost_trial) / max(cost, 1e-300)
                p, r, cost = trial, r_trial, cost_trial
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if rel_drop < cost_tol:
                    converged = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if converged or not accepted:
            if not accepted and not converged:
                converged = True  # no downhill direction left at machine resolution
            break

    f0 = model_fn(x, *p)
    jac = _numeric_jacobian(model_fn, x, p, f0) * w[:, None]
    jtj = jac.T @ jac
    cov = _covariance(jtj, names)
    if sigma is None:
        dof = len(y) - len(p)
        scale = cost / dof if dof > 0 else 0.0
        cov = cov * scale
    unc = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        names=names,
        params=p,
        uncertainties=unc,
        covariance=cov,
        rss=cost,
        converged=converged,
        iterations=iterations,
    )


def _covariance(jtj: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
    scale = np.sqrt(np.clip(np.diag(jtj), 0.0, None))
    scale[scale == 0] = 1.0
    normalized = jtj / np.outer(scale, scale)
    evals, evecs = np.linalg.eigh(normalized)
    if evals[-1] <= 0 or evals[0] < 1e-14 * evals[-1]:
        vec = np.abs(evecs[:, 0])
        order = np.argsort(vec)[::-1]
        a = names[order[0]]
        b = names[order[1]] if len(names) > 1 else names[order[0]]
        raise DegenerateParameterError(a, b)
    inv = (evecs / evals) @ evecs.T
    return inv / np.outer(scale, scale)


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum; `magnitude` is in signal units."""

    frequencies: np.ndarray  # Hz
    magnitude: np.ndarray
    n: int
    dt: float

    def sum_squares(self) -> float:
        """Reconstruct sum((y - mean)^2) from the one-sided bins (Parseval)."""
        mags = self.magnitude.astype(float)
        weights = np.full_like(mags, 0.5)
        weights[0] = 1.0
        if self.n % 2 == 0:
            weights[-1] = 1.0
        return float(self.n * np.sum(weights * mags**2))

    def peak_frequency(self) -> float:
        i = int(np.argmax(self.magnitude[1:]) + 1)
        return float(self.frequencies[i])


def fft_spectrum(trace: Trace) -> Spectrum:
    """One-sided magnitude spectrum of a mean-removed trace (no window)."""
    if trace.n < 8:
        raise ValueError("spectral operations need at least 8 samples")
    y = trace.samples - trace.samples.mean()
    spec = np.fft.rfft(y)
    mags = np.abs(spec) * 2.0 / trace.n
    mags[0] = np.abs(spec[0]) / trace.n
    if trace.n % 2 == 0:
        mags[-1] = np.abs(spec[-1]) / trace.n
    freqs = np.fft.rfftfreq(trace.n, trace.dt)
    return Spectrum(frequencies=freqs, magnitude=mags, n=trace.n, dt=trace.dt)


def _lorentzian(x, center, fwhm, amplitude, offset):
    return amplitude / (1.0 + (2.0 * (x - center) / fwhm) ** 2) + offset


def fit_lorentzian(spectrum, sigma=None) -> FitResult:
    """Lorentzian fit with a deterministic peak-and-half-width initial guess.

    Accepts a Spectrum or an (x, y) pair.  Dips are fitted with negative
    amplitude when the strongest interior feature points downward.
    """
    if isinstance(spectrum, Spectrum):
        x, y = spectrum.frequencies, spectrum.magnitude
    else:
        x, y = spectrum
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
    base = float(np.median(y))
    i_hi = int(np.argmax(y))
    i_lo = int(np.argmin(y))
    dip = (base - y[i_lo]) > (y[i_hi] - base)
    i_pk = i_lo if dip else i_hi
    if i_pk in (0, len(y) - 1):
        raise FitError("spectrum extremum sits on the boundary; cannot fit a Lorentzian")
    amp = y[i_pk] - base
    half = base + amp / 2.0
    j = i_pk
    while j < len(y) - 1 and (y[j] < half if dip else y[j] > half):
        j += 1
    k = i_pk
    while k > 0 and (y[k] < half if dip else y[k] > half):
        k -= 1
    width = max(float(x[j] - x[k]), float(abs(x[1] - x[0])))
    p0 = [float(x[i_pk]), width, float(amp), base]
    return nlls(
        _lorentzian, (x, y), p0, names=("center", "fwhm", "amplitude", "offset"), sigma=sigma
    )


def _fit_carrier(spectrum: Spectrum, guard_bins: int) -> FitResult:
    """Lorentzian carrier fit restricted to a window around the strongest
    peak above the low-frequency guard.

    A line narrower than the frequency resolution (all power in one bin)
    makes the Lorentzian ill-posed; the peak bin is then reported directly
    with a one-bin center uncertainty."""
    mags = spectrum.magnitude
    freqs = spectrum.frequencies
    guard = max(1, guard_bins)
    if len(mags) <= guard + 2:
        raise FitError("spectrum too short for a guarded peak search")
    i_pk = int(np.argmax(mags[guard:]) + guard)
    f_pk = freqs[i_pk]
    resolution = float(freqs[1] - freqs[0])
    lo = max(1, int(np.searchsorted(freqs, 0.5 * f_pk)))
    hi = min(len(freqs), int(np.searchsorted(freqs, 1.5 * f_pk)) + 1)
    if hi - lo < 8:
        lo = max(1, i_pk - 10)
        hi = min(len(freqs), i_pk + 11)
    try:
        return fit_lorentzian((freqs[lo:hi], mags[lo:hi]))
    except DegenerateParameterError:
        params = np.array([f_pk, resolution, float(mags[i_pk]), 0.0])
        unc = np.array([resolution, resolution, 0.0, 0.0])
        return FitResult(
            names=("center", "fwhm", "amplitude", "offset"),
            params=params,
            uncertainties=unc,
            covariance=np.diag(unc**2),
            rss=0.0,
            converged=True,
            iterations=0,
            meta={"unresolved_line": True},
        )


def butterworth_bandpass(trace: Trace, f_lo: float, f_hi: float, zero_phase: bool = True) -> Trace:
    """2nd-order Butterworth band-pass, forward-backward by default."""
    nyquist = 0.5 / trace.dt
    if not 0.0 < f_lo < f_hi:
        raise ValueError("need 0 < f_lo < f_hi")
    if f_hi >= nyquist:
        raise ValueError(f"upper cutoff {f_hi:.6g} Hz reaches the Nyquist frequency {nyquist:.6g} Hz")
    sos = butter(2, [f_lo, f_hi], btype="band", fs=1.0 / trace.dt, output="sos")
    y = sosfiltfilt(sos, trace.samples) if zero_phase else sosfilt(sos, trace.samples)
    return Trace(dt=trace.dt, samples=np.asarray(y), sigma=trace.sigma, valid=trace.valid)


def hilbert_envelope(trace: Trace, edge_fraction: float = 0.05) -> Trace:
    """Magnitude of the analytic signal, sqrt(y^2 + H[y]^2).

    The transform is computed spectrally with zero padding to the next power
    of two.  The first and last `edge_fraction` of samples are flagged
    invalid; envelope fits skip them.
    """
    n = trace.n
    nfft = 1 << (n - 1).bit_length()
    analytic = hilbert(trace.samples, N=nfft)[:n]
    env = np.abs(analytic)
    n_edge = int(edge_fraction * n)
    valid = np.ones(n, dtype=bool)
    if n_edge > 0:
        valid[:n_edge] = False
        valid[-n_edge:] = False
    return Trace(dt=trace.dt, samples=env, valid=valid)


def _exp_rate(t, amplitude, rate):
    return amplitude * np.exp(-rate * t)


def fit_exponential(envelope: Trace) -> FitResult:
    """Fit amplitude * exp(-t/tau) to an envelope, reporting tau.

    Internally parameterized by the rate 1/tau so a flat envelope stays
    finite; such fits come back flagged `tau_unbounded` with the tau
    uncertainty spanning zero rate.
    """
    t = envelope.times
    y = envelope.samples
    mask = envelope.valid if envelope.valid is not None else np.ones(len(y), bool)
    pos = mask & (y > 0)
    if pos.sum() < 3:
        raise FitError("not enough positive envelope samples to fit")
    slope, intercept = np.polyfit(t[pos], np.log(y[pos]), 1)
    p0 = [math.exp(intercept), max(-slope, 1e-6 / (t[-1] - t[0] + 1e-300))]
    fit = nlls(
        _exp_rate,
        (t[mask], y[mask]),
        p0,
        names=("amplitude", "rate"),
        sigma=None if envelope.sigma is None else envelope.sigma[mask],
    )
    amp, rate = fit.params
    rate_sigma = fit.uncertainties[1]
    span = float(t[mask][-1] - t[mask][0])
    # unbounded when the rate is non-positive, its sign is not resolved, or
    # the implied decay time dwarfs the record
    unbounded = (rate <= 0) or (rate_sigma >= abs(rate)) or (rate * span < 1e-2)
    tau = 1.0 / rate if rate > 0 else math.inf
    tau_sigma = rate_sigma / rate**2 if rate > 0 else math.inf
    jac = np.array([[1.0, 0.0], [0.0, -1.0 / rate**2 if rate != 0 else 0.0]])
    cov = jac @ fit.covariance @ jac.T
    return FitResult(
        names=("amplitude", "tau"),
        params=np.array([amp, tau]),
        uncertainties=np.array([fit.uncertainties[0], tau_sigma]),
        covariance=cov,
        rss=fit.rss,
        converged=fit.converged,
        iterations=fit.iterations,
        meta={"tau_unbounded": unbounded, "rate": rate, "rate_sigma": rate_sigma},
    )


@dataclass(frozen=True)
class RabiExtraction:
    omega: float          # rad/s
    omega_sigma: float
    tau: float            # s
    tau_sigma: float
    cycles: float
    flags: dict

    @property
    def frequency_hz(self) -> float:
        return self.omega / (2.0 * math.pi)


def extract_rabi(trace: Trace, guard_bins: int = 3) -> RabiExtraction:
    """Carrier and envelope extraction for a damped oscillation trace.

    Chain: Fourier spectrum, Lorentzian carrier fit, band-pass at +-50%
    around the carrier, Hilbert envelope, exponential envelope fit.  Any
    stage failure is re-raised with the stage name.

    Slow population loss concentrates spectral weight in the first few
    resolution bins; the carrier peak is picked above `guard_bins` and the
    Lorentzian is fitted inside +-50% of that peak so a strong loss
    component cannot capture the fit.
    """

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            raise PipelineError(f"stage {name!r}: {exc}") from exc

    spectrum = stage("fft", fft_spectrum, trace)
    carrier = stage("lorentzian", _fit_carrier, spectrum, guard_bins)
    f_c = carrier.value("center")
    if f_c <= 0:
        raise PipelineError("stage 'lorentzian': carrier frequency is not positive")
    filtered = stage("bandpass", butterworth_bandpass, trace, 0.5 * f_c, 1.5 * f_c)
    centered = Trace(dt=filtered.dt, samples=filtered.samples - filtered.samples.mean())
    envelope = stage("envelope", hilbert_envelope, centered)
    env_fit = stage("exponential", fit_exponential, envelope)
    tau = env_fit.value("tau")
    omega = 2.0 * math.pi * f_c
    if env_fit.meta["tau_unbounded"] or not math.isfinite(tau):
        n_cycles = math.inf
    else:
        n_cycles = omega * tau / (2.0 * math.pi)
    flags = dict(env_fit.meta)
    # carrier center uncertainty in angular units
    omega_sigma = 2.0 * math.pi * carrier.sigma("center")
    return RabiExtraction(
        omega=omega,
        omega_sigma=omega_sigma,
        tau=tau,
        tau_sigma=env_fit.sigma("tau"),
        cycles=n_cycles,
        flags=flags,
    )


def _loss_model(t, loss_amp, tau_loss, offset):
    return offset - loss_amp * (1.0 - np.exp(-t / tau_loss))


def fit_loss(trace: Trace, carrier_hz: float) -> FitResult:
    """Slow-loss parameters from the difference of the raw trace and its
    band-passed version.

    The band-pass keeps only the oscillation, so the difference carries the
    slow population loss, fitted as offset - loss_amp (1 - exp(-t/tau_loss)).
    The difference is taken on the raw samples, before any envelope step.
    """
    filtered = butterworth_bandpass(trace, 0.5 * carrier_hz, 1.5 * carrier_hz)
    slow = trace.samples - filtered.samples
    t = trace.times
    drop = float(slow[0] - slow[-1])
    span = float(t[-1] - t[0])
    p0 = [max(drop, 1e-6), span / 2.0, float(slow[0])]
    return nlls(_loss_model, (t, slow), p0, names=("loss_amp", "tau_loss", "offset"),
                sigma=None if trace.sigma is None else trace.sigma)


def _sin_time(t, amplitude, frequency, phase, offset):
    return offset + amplitude * np.cos(2.0 * np.pi * frequency * t + phase)


def _sin_phase(x, amplitude, phase, offset):
    return offset + amplitude * np.cos(x + phase)


def fit_sinusoid(x, y, mode: str = "phase", sigma=None) -> FitResult:
    """Sinusoid fit for phase scans and free-frequency time scans.

    mode "phase": y = offset + amplitude cos(x + phase) with x in radians.
    mode "time": y = offset + amplitude cos(2 pi f x + phase) with f free,
    initialized from the periodogram peak.  meta carries the fringe contrast
    amplitude/offset and a `frequency_unidentifiable` flag when the
    amplitude is consistent with zero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 5:
        raise FitError("sinusoid fits need at least 5 points")
    off0 = float(y.mean())
    if mode == "phase":
        z = np.sum((y - off0) * np.exp(-1j * x))
        amp0 = 2.0 * abs(z) / len(x)
        phase0 = float(np.angle(z))
        p0 = [max(amp0, 1e-12), phase0, off0]
        names = ("amplitude", "phase", "offset")
        model = _sin_phase
    elif mode == "time":
        trace = Trace.from_xy(x, y)
        spec = fft_spectrum(trace)
        f0 = spec.peak_frequency()
        if f0 <= 0:
            f0 = 1.0 / (x[-1] - x[0])
        z = np.sum((y - off0) * np.exp(-2j * np.pi * f0 * x))
        amp0 = 2.0 * abs(z) / len(x)
        phase0 = float(np.angle(z))
        p0 = [max(amp0, 1e-12), f0, phase0, off0]
        names = ("amplitude", "frequency", "phase", "offset")
        model = _sin_time
    else:
        raise ValueError(f"unknown sinusoid mode {mode!r}")
    try:
        fit = nlls(model, (x, y), p0, names=names, sigma=sigma)
    except DegenerateParameterError:
        # vanishing amplitude leaves phase (and frequency) unconstrained
        params = np.array(p0)
        params[0] = 0.0
        unc = np.full(len(p0), np.inf)
        unc[-1] = 0.0
        fit = FitResult(names, params, unc, np.diag(unc**2), rss=float(np.sum((y - off0) ** 2)),
                        converged=True, iterations=0)
    amp = abs(fit.value("amplitude"))
    off = fit.value("offset")
    meta = dict(fit.meta)
    meta["contrast"] = amp / off if off != 0 else math.inf
    floor = 1e-9 * (abs(off) + float(np.ptp(y)) + 1e-300)
    meta["frequency_unidentifiable"] = amp <= max(fit.sigma("amplitude"), floor)
    return FitResult(fit.names, fit.params, fit.uncertainties, fit.covariance,
                     fit.rss, fit.converged, fit.iterations, meta)


def _gauss_decay(t, contrast0, t2):
    return contrast0 * np.exp(-((t / t2) ** 2))


def fit_gaussian_decay(times, contrasts, sigma=None) -> FitResult:
    """Fit C0 exp(-(T/T2)^2) to contrast-vs-dark-time data."""
    t = np.asarray(times, dtype=float)
    c = np.asarray(contrasts, dtype=float)
    if np.any(c < 0) or np.any(c > 1.05):
        raise FitError("contrasts must lie in [0, 1.05]")
    c0 = float(c.max())
    below = np.nonzero(c < c0 / math.e)[0]
    t2_0 = float(t[below[0]]) if len(below) else float(t.max())
    if t2_0 <= 0:
        t2_0 = float(t.max()) or 1.0
    return nlls(_gauss_decay, (t, c), [c0, t2_0], names=("contrast0", "t2"), sigma=sigma)


def fit_linear(x, y, sigma=None) -> FitResult:
    """Weighted least-squares line fit, closed form."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(x)) < 2:
        raise FitError("need at least two distinct x values")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float) ** 2
    sw = w.sum()
    sx = (w * x).sum()
    sy = (w * y).sum()
    sxx = (w * x * x).sum()
    sxy = (w * x * y).sum()
    det = sw * sxx - sx * sx
    slope = (sw * sxy - sx * sy) / det
    intercept = (sxx * sy - sx * sxy) / det
    cov = np.array([[sw, -sx], [-sx, sxx]]) / det
    resid = y - slope * x - intercept
    rss = float((w * resid**2).sum())
    if sigma is None:
        dof = len(y) - 2
        cov = cov * (rss / dof if dof > 0 else 0.0)
    unc = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(
        names=("slope", "intercept"),
        params=np.array([slope, intercept]),
        uncertainties=unc,
        covariance=cov,
        rss=rss,
        converged=True,
        iterations=0,
    )


def detection_fidelity(measured: Measured, excitation: Measured) -> Measured:
    """Ratio of measured to excited population with first-order error
    propagation, treating the two inputs as independent."""
    for m in (measured, excitation):
        if not 0.0 < m.value <= 1.05:
            raise ValueError("populations must lie in (0, 1.05]")
    ratio = measured.value / excitation.value
    rel = math.hypot(measured.sigma / measured.value, excitation.sigma / excitation.value)
    return Measured(ratio, ratio * rel)
