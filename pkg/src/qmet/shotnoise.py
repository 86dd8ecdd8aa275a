"""Shot-noise limited read-out of the two projections.

The projected power on Pi_1 is P_1 I0 with P_1 = n(n+1)/(2n+1)^2 |g1~_tot|^2; a
bias g^Delta converts the small drive g cos(2 pi f t) into a line at f whose
amplitude is linear in g.  The shot noise of the projected photon number scales
with the same bias, so the SNR does not depend on it.

The Monte Carlo draws Poisson photon counts per time bin, demodulates the f line
with a single DFT bin and reads a noise floor off neighbouring bins.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK

from .beam import (
    ExperimentGeometry,
    MinDetectable,
    effective_epsilon,
    experiment_params,
    min_detectable_displacement_tilt,
    modulation_amplitudes,
)
from .errors import DomainError, SamplingError, WeakRegimeError
from .weak import check_weakness

MIN_PERIODS = 10
NOISE_BINS = 20
MAX_DRIVE_RATIO = 0.1
PROJECTORS = ("Pi1", "Pi2", "reference")

# HG order: (V1 mV, V2 mV, dg1 m, dg2 1/m, dd m, dphi rad)
TABLE1 = {
    1: (73.10e-3, 107.03e-3, 1.90e-9, 6.62e-2, 2.94e-9, 8.22e-9),
    2: (54.53e-3, 79.67e-3, 1.42e-9, 4.93e-2, 2.19e-9, 6.12e-9),
    3: (45.59e-3, 66.56e-3, 1.19e-9, 4.12e-2, 1.83e-9, 5.11e-9),
    4: (40.01e-3, 58.39e-3, 1.04e-9, 3.62e-2, 1.60e-9, 4.48e-9),
    5: (36.12e-3, 53.14e-3, 0.94e-9, 3.29e-2, 1.45e-9, 4.08e-9),
}


@dataclass(frozen=True)
class DriveSignal:
    """Peak drive voltage and the mirror response.

    ``d_max`` and ``phi_max`` are the beam displacement and tilt per volt when the
    two actuators move in phase (theta = 0) or in antiphase (theta = pi).
    """

    amplitude_volts: float = 0.0
    freq: float = 2000.0
    theta: float = np.radians(4.0)
    d_bias: float = 0.5e-6
    phi_bias: float = 1e-6
    d_max: float = 15.56e-9
    phi_max: float = 2.2e-6

    @property
    def d_unit(self) -> float:
        return self.d_max * np.cos(self.theta / 2)

    @property
    def phi_unit(self) -> float:
        return self.phi_max * np.sin(self.theta / 2)


def drive_to_signal(drive: DriveSignal) -> tuple[float, float]:
    """(d, phi) modulation amplitudes produced by the drive."""
    return drive.amplitude_volts * drive.d_unit, drive.amplitude_volts * drive.phi_unit


@dataclass(frozen=True)
class DetectorModel:
    I0: float
    nu: float
    tau: float
    photon_energy: float
    rbw: float = 18.34
    saturation: float = 1.54e-9

    def __post_init__(self):
        if min(self.I0, self.nu, self.tau, self.photon_energy) <= 0:
            raise DomainError("detector quantities must be positive")
        if abs(self.I0 - self.photon_energy * self.nu / self.tau) > 1e-6 * self.I0:
            raise DomainError("I0 must equal photon_energy * nu / tau")

    @classmethod
    def from_photons(cls, nu: float, tau: float, wavelength: float, **kw) -> "DetectorModel":
        gamma = PLANCK * SPEED_OF_LIGHT / wavelength
        return cls(gamma * nu / tau, nu, tau, gamma, **kw)

    @property
    def photon_rate(self) -> float:
        return self.nu / self.tau

    @property
    def shot_noise(self) -> float:
        """delta I0 = gamma sqrt(nu) / tau."""
        return self.photon_energy * np.sqrt(self.nu) / self.tau


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 5
    geom: ExperimentGeometry = field(default_factory=ExperimentGeometry)
    epsilon: float = np.radians(5.0)
    nu: float = 1.05e7
    tau: float = 54.53e-3
    rbw: float = 18.34
    saturation: float = 1.54e-9
    drive: DriveSignal = field(default_factory=DriveSignal)
    bins_per_period: int = 50
    weak_value_model: str = "small_angle"

    @property
    def periods(self) -> int:
        """Whole drive periods in the record closest to tau."""
        return max(int(round(self.drive.freq * self.tau)), MIN_PERIODS)

    @property
    def record(self) -> float:
        return self.periods / self.drive.freq

    @property
    def sample_rate(self) -> float:
        return self.drive.freq * self.bins_per_period

    def detector(self) -> DetectorModel:
        return DetectorModel.from_photons(
            self.nu, self.record, self.geom.wavelength, rbw=self.rbw, saturation=self.saturation
        )

    def t_grid(self) -> np.ndarray:
        m = self.periods * self.bins_per_period
        return np.arange(m) / self.sample_rate

    def with_volts(self, volts: float) -> "ExperimentConfig":
        return replace(self, drive=replace(self.drive, amplitude_volts=volts))

    @property
    def weak_value(self) -> float:
        return 1.0 / effective_epsilon(self.epsilon, self.weak_value_model)

    def biases(self) -> tuple[float, float]:
        return experiment_params(self.drive.d_bias, self.drive.phi_bias, self.geom)

    def unit_amplitudes(self) -> tuple[float, float]:
        """(g1, g2) line amplitudes per volt of drive."""
        return modulation_amplitudes(self.drive.d_unit, self.drive.phi_unit, self.geom)


def signals(config: ExperimentConfig, t) -> tuple[np.ndarray, np.ndarray]:
    """g1_tot(t), g2_tot(t): bias plus d cos(wt) and phi sin(wt) mapped to the waist frame."""
    d_amp, phi_amp = drive_to_signal(config.drive)
    w = 2 * np.pi * config.drive.freq * np.asarray(t, float)
    d = config.drive.d_bias + d_amp * np.cos(w)
    phi = config.drive.phi_bias + phi_amp * np.sin(w)
    return experiment_params(d, phi, config.geom)


def projected_power_timeseries(config: ExperimentConfig, projector: str, t) -> np.ndarray:
    """Power (W) on the chosen projection; ``reference`` is the unperturbed mode."""
    if projector not in PROJECTORS:
        raise DomainError(f"projector must be one of {PROJECTORS}")
    n, s0 = config.n, config.geom.sigma0
    I0 = config.detector().I0
    t = np.asarray(t, float)
    if projector == "reference":
        return np.full(t.shape, I0)
    g1_amp, g2_amp = modulation_amplitudes(*drive_to_signal(config.drive), config.geom)
    g1b, g2b = config.biases()
    try:
        check_weakness(n, s0, abs(g1b) + g1_amp, abs(g2b) + g2_amp)
    except WeakRegimeError as exc:
        raise WeakRegimeError(f"bias plus drive leaves the weak regime: {exc}") from None
    g1, g2 = signals(config, t)
    r = config.weak_value * np.sqrt(2 * n + 1)
    gt = r * g1 / s0 if projector == "Pi1" else 2 * r * s0 * g2
    return n * (n + 1) / (2 * n + 1) ** 2 * gt**2 * I0


def line_amplitude(config: ExperimentConfig, projector: str) -> float:
    """Analytic f-line power: 2 c g^Delta g I0 with c = n(n+1)/((2n+1) sigma0^2 eps^2) or its g2 twin."""
    n, s0 = config.n, config.geom.sigma0
    e = 1.0 / config.weak_value
    base = n * (n + 1) / ((2 * n + 1) * e**2)
    g1b, g2b = config.biases()
    g1, g2 = modulation_amplitudes(*drive_to_signal(config.drive), config.geom)
    I0 = config.detector().I0
    if projector == "Pi1":
        return 2 * base / s0**2 * abs(g1b) * g1 * I0
    if projector == "Pi2":
        return 8 * base * s0**2 * abs(g2b) * g2 * I0
    raise DomainError("line amplitude defined for Pi1 and Pi2 only")


def _check_sampling(m: int, sample_rate: float, f: float):
    if f >= sample_rate / 2:
        raise SamplingError(f"f = {f} Hz is not below Nyquist {sample_rate / 2} Hz")
    if m / sample_rate * f < MIN_PERIODS:
        raise SamplingError(f"record covers {m / sample_rate * f:.2f} periods, need {MIN_PERIODS}")


def demodulate_peak(series, sample_rate: float, f: float) -> float:
    """Single-bin DFT magnitude at ``f``; a cosine of amplitude A returns A."""
    x = np.asarray(series, float)
    _check_sampling(x.size, sample_rate, f)
    t = np.arange(x.size) / sample_rate
    return float(abs(2.0 / x.size * np.sum(x * np.exp(-2j * np.pi * f * t))))


def median_factor(count: int) -> float:
    """E[median] / mean for ``count`` iid exponential variables.

    The i-th order statistic has mean H_N - H_(N-i); an even count averages the two
    middle ones.  Tends to ln 2 for large counts.
    """
    if count < 1:
        raise DomainError("need at least one noise bin")
    h = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, count + 1))])
    mid = [count // 2, count // 2 + 1] if count % 2 == 0 else [(count + 1) // 2]
    return float(np.mean([h[count] - h[count - i] for i in mid]))


def _line_and_floor(counts: np.ndarray, k_f: int) -> tuple[np.ndarray, np.ndarray]:
    """|Z|^2 at the line and the median-based noise power per trial (rows)."""
    m = counts.shape[-1]
    Z = np.fft.rfft(counts, axis=-1) * (2.0 / m)
    neighbours = [k for k in range(k_f - NOISE_BINS, k_f + NOISE_BINS + 1) if k not in (0, k_f, 2 * k_f)]
    # |Z|^2 of complex Gaussian noise is exponential, so the median has a closed-form bias
    med = np.median(np.abs(Z[:, neighbours]) ** 2, axis=-1)
    return np.abs(Z[:, k_f]) ** 2, med / median_factor(len(neighbours))


def analytic_snr(n: int, nu: float, epsilon: float, sigma0: float, g: float, which: int = 1) -> float:
    """Shot-noise SNR of the f line for g1 (``which=1``) or g2 (``which=2``)."""
    if n < 1:
        raise DomainError("SNR needs n >= 1")
    root = np.sqrt(n * (n + 1) * nu / ((2 * n + 1) * epsilon**2))
    if which == 1:
        return float(2 * root * g / sigma0)
    if which == 2:
        return float(4 * root * sigma0 * g)
    raise DomainError("which must be 1 or 2")


def analytic_noise(config: ExperimentConfig, projector: str) -> float:
    """Shot noise of the projected power: sqrt(c) g^Delta delta I0 (watts)."""
    n, s0 = config.n, config.geom.sigma0
    e = 1.0 / config.weak_value
    root = np.sqrt(n * (n + 1) / ((2 * n + 1) * e**2))
    g1b, g2b = config.biases()
    dI0 = config.detector().shot_noise
    if projector == "Pi1":
        return root * abs(g1b) / s0 * dI0
    return root * 2 * s0 * abs(g2b) * dI0


@dataclass(frozen=True)
class SnrEstimate:
    snr: float
    snr_se: float
    signal_power: float
    signal_power_se: float
    noise_amplitude: float
    peak_watts: float
    trials: int


def _trial_generators(seed: int, trials: int):
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(trials)]


def mc_snr(
    config: ExperimentConfig, projector: str, seed: int = 0, trials: int = 400, chunk: int = 200
) -> SnrEstimate:
    """Monte Carlo SNR of the f line on ``projector``.

    Each trial draws Poisson counts per bin from its own counter-based generator
    derived from ``seed``, so a given trial sees the same random stream at every
    drive level.  The per-trial line power minus the per-trial noise power is an
    unbiased estimate of the signal power; its mean over trials gives the SNR.
    """
    if trials < 2:
        raise DomainError("need at least two trials")
    det = config.detector()
    t = config.t_grid()
    dt = 1.0 / config.sample_rate
    power = projected_power_timeseries(config, projector, t)
    if power.max() > det.saturation:
        warnings.warn(f"projected power {power.max():.3e} W exceeds detector saturation")
    lam = power / det.photon_energy * dt
    k_f = config.periods
    gens = _trial_generators(seed, trials)
    line, noise = np.empty(trials), np.empty(trials)
    for start in range(0, trials, chunk):
        block = gens[start:start + chunk]
        counts = np.stack([g.poisson(lam) for g in block]).astype(float)
        line[start:start + len(block)], noise[start:start + len(block)] = _line_and_floor(counts, k_f)
    s = line - noise
    s_mean, n_mean = s.mean(), noise.mean()
    s_se, n_se = s.std(ddof=1) / np.sqrt(trials), noise.std(ddof=1) / np.sqrt(trials)
    a_mean = np.sqrt(n_mean) / 2.0
    snr = np.sign(s_mean) * np.sqrt(abs(s_mean)) / a_mean
    # delta method on sqrt(S / N), ignoring the weak S-N correlation
    if s_mean > 0:
        snr_se = abs(snr) * 0.5 * np.hypot(s_se / s_mean, n_se / n_mean)
    else:
        snr_se = np.sqrt(s_se) / a_mean
    to_watts = det.photon_energy / dt
    return SnrEstimate(
        float(snr),
        float(snr_se),
        float(s_mean),
        float(s_se),
        float(a_mean),
        float(np.sqrt(max(s_mean, 0.0)) * to_watts),
        trials,
    )


def mc_threshold(
    config: ExperimentConfig,
    projector: str,
    seed: int = 0,
    trials: int = 400,
    rtol: float = 1e-4,
) -> tuple[float, float]:
    """Drive voltage at which the Monte Carlo SNR crosses one, with its standard error.

    The bracket starts at the largest drive that keeps g / g^Delta below 0.1 and is
    halved until the SNR drops below one; log-bisection follows.
    """
    g1u, g2u = config.unit_amplitudes()
    g1b, g2b = config.biases()
    gu, gb = (g1u, g1b) if projector == "Pi1" else (g2u, g2b)
    hi = MAX_DRIVE_RATIO * abs(gb) / gu

    def snr(v):
        return mc_snr(config.with_volts(v), projector, seed, trials)

    est_hi = snr(hi)
    if est_hi.snr <= 1.0:
        raise DomainError("SNR stays below one within the weak drive budget; raise nu or the bias")
    lo = hi / 2
    while snr(lo).snr > 1.0:
        hi, lo = lo, lo / 2
        if lo < 1e-12:
            raise DomainError("SNR does not fall below one")
    while hi / lo - 1 > rtol:
        mid = np.sqrt(hi * lo)
        if snr(mid).snr > 1.0:
            hi = mid
        else:
            lo = mid
    v = np.sqrt(hi * lo)
    est = snr(v)
    # SNR is linear in the drive, so the relative error transfers directly
    return float(v), float(v * est.snr_se / max(est.snr, 1e-300))


@dataclass(frozen=True)
class SimResult:
    snr1: float
    snr2: float
    min_detectable: MinDetectable
    min_detectable_se: tuple[float, float]
    spectrum_peaks: tuple[float, float]
    trials_used: int
    seed: int
    volts: tuple[float, float]


def monte_carlo_snr(config: ExperimentConfig, seed: int = 0, trials: int = 400) -> SimResult:
    """Monte Carlo minimum detectable g1, g2 (and d, phi) for ``config``.

    The SNR fields and spectrum peaks are evaluated at ``config.drive`` when its
    amplitude is non-zero, otherwise at the thresholds found.
    """
    if trials < 100:
        raise DomainError(f"need at least 100 trials for a usable standard error, got {trials}")
    g1u, g2u = config.unit_amplitudes()
    v1, v1_se = mc_threshold(config, "Pi1", seed, trials)
    v2, v2_se = mc_threshold(config, "Pi2", seed, trials)
    dg1, dg2 = v1 * g1u, v2 * g2u
    geom = config.geom
    md = MinDetectable(dg1, dg2, float(np.hypot(dg1, geom.z1 / geom.k * dg2)), dg2 / geom.k)
    volts = config.drive.amplitude_volts
    e1 = mc_snr(config.with_volts(volts or v1), "Pi1", seed, trials)
    e2 = mc_snr(config.with_volts(volts or v2), "Pi2", seed, trials)
    return SimResult(
        e1.snr, e2.snr, md, (v1_se * g1u, v2_se * g2u), (e1.peak_watts, e2.peak_watts), trials, seed, (v1, v2)
    )


@dataclass(frozen=True)
class Table1Row:
    n: int
    analytic: MinDetectable
    analytic_exact_weak_value: MinDetectable
    from_voltages: MinDetectable
    measured: MinDetectable
    volts: tuple[float, float]
    monte_carlo: MinDetectable | None = None


def table1_reproduction(
    config: ExperimentConfig | None = None, modes=range(1, 6), mc_trials: int = 0, seed: int = 0
) -> list[Table1Row]:
    """Minimum-detectable values for each HG order next to the measured table.

    ``from_voltages`` converts the measured threshold voltages with the per-volt
    line amplitudes; ``analytic_exact_weak_value`` uses (cot(eps/2)+1)/2 instead of 1/eps.
    """
    config = config or ExperimentConfig()
    geom = config.geom
    g1u, g2u = config.unit_amplitudes()
    rows = []
    for n in modes:
        a = min_detectable_displacement_tilt(n, config.nu, config.epsilon, geom.sigma0, geom)
        ax = min_detectable_displacement_tilt(n, config.nu, config.epsilon, geom.sigma0, geom, "exact")
        v1, v2, *measured = TABLE1[n]
        dg1, dg2 = v1 * g1u, v2 * g2u
        fv = MinDetectable(dg1, dg2, float(np.hypot(dg1, geom.z1 / geom.k * dg2)), dg2 / geom.k)
        mc = None
        if mc_trials:
            mc = monte_carlo_snr(replace(config, n=n), seed, mc_trials).min_detectable
        rows.append(Table1Row(n, a, ax, fv, MinDetectable(*measured), (v1, v2), mc))
    return rows
