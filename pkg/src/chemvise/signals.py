"""Synthetic chemiresistive exposure trials: generation, preprocessing, windowing.

A trial is a three-phase exposure (baseline flux, analyte adsorption,
desorption) recorded by an array of channels whose resistances respond to
each analyte with first-order kinetics. Channel response to a mixture is
the sum of single-analyte responses plus an optional pairwise interference
term, so the additive part can be checked exactly against superposition of
single-analyte trials.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    ConstantChannelWarning,
    DimensionError,
    ScheduleError,
    UnknownAnalyteError,
    WindowRangeError,
)

ZSCORE_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class SensorTrace:
    """Time x channel matrix of sensor readings.

    values[t, s] is channel s at time t0_s + t / sample_rate_hz. Treated
    as immutable after construction.
    """

    sample_rate_hz: float
    t0_s: float
    values: np.ndarray
    channel_names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"trace values must be [T x S] with T,S >= 1, got shape {v.shape}")
        if len(self.channel_names) != v.shape[1]:
            raise DimensionError(
                f"{len(self.channel_names)} channel names for {v.shape[1]} channels")
        if not self.sample_rate_hz > 0:
            raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("trace contains non-finite values")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(self.n_samples) / self.sample_rate_hz


@dataclass(frozen=True)
class AnalyteMix:
    """Exposure composition: one or two (analyte, concentration) parts.

    label_positive is derived at construction from a target analyte: a mix
    containing any amount of the target analyte is a positive sample.
    """

    components: tuple[tuple[str, float], ...]
    label_positive: bool = False

    def __post_init__(self):
        comps = tuple((str(a), float(c)) for a, c in self.components)
        object.__setattr__(self, "components", comps)
        if not 1 <= len(comps) <= 2:
            raise ConfigError(f"a mix holds 1 or 2 components, got {len(comps)}")
        ids = [a for a, _ in comps]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate analyte in mix: {ids}")
        for a, c in comps:
            if not 0.0 < c <= 1.0:
                raise ConfigError(f"concentration for {a} must be in (0, 1], got {c}")

    @classmethod
    def make(cls, components, target_analyte: str) -> "AnalyteMix":
        comps = tuple((str(a), float(c)) for a, c in components)
        positive = any(a == target_analyte for a, _ in comps)
        return cls(comps, positive)

    def contains(self, analyte_id: str) -> bool:
        return any(a == analyte_id for a, _ in self.components)

    @property
    def analyte_ids(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.components)


@dataclass(frozen=True)
class ExposureSchedule:
    """Baseline / exposure / desorption phase durations in seconds."""

    baseline_s: float
    exposure_s: float
    desorption_s: float

    @property
    def onset_s(self) -> float:
        return self.baseline_s

    @property
    def exposure_end_s(self) -> float:
        return self.baseline_s + self.exposure_s

    @property
    def total_s(self) -> float:
        return self.baseline_s + self.exposure_s + self.desorption_s

    def validate(self):
        if self.baseline_s < 0 or self.desorption_s < 0:
            raise ScheduleError("baseline_s and desorption_s must be non-negative")
        if not self.exposure_s > 0:
            raise ScheduleError(f"exposure_s must be positive, got {self.exposure_s}")
        if not 0 < self.onset_s < self.total_s:
            raise ScheduleError("onset must lie strictly inside the trace; "
                                "use a positive baseline_s")


@dataclass(frozen=True)
class AffinityModel:
    """Synthetic sensor array: per-channel response gains and kinetics.

    affinities[s, a] is channel s's response per unit concentration of
    analyte a; rise and decay time constants are per analyte. A pairwise
    interference term of strength interference_gamma makes double-analyte
    responses deviate from the sum of singles.
    """

    analyte_ids: tuple[str, ...]
    affinities: np.ndarray
    baselines: np.ndarray
    tau_rise_s: np.ndarray
    tau_decay_s: np.ndarray
    interference_gamma: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    saturation: str = "identity"
    saturation_scale: float = 1.0
    channel_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "analyte_ids", tuple(self.analyte_ids))
        aff = np.asarray(self.affinities, dtype=np.float64)
        base = np.asarray(self.baselines, dtype=np.float64)
        tr = np.asarray(self.tau_rise_s, dtype=np.float64)
        td = np.asarray(self.tau_decay_s, dtype=np.float64)
        object.__setattr__(self, "affinities", aff)
        object.__setattr__(self, "baselines", base)
        object.__setattr__(self, "tau_rise_s", tr)
        object.__setattr__(self, "tau_decay_s", td)
        n_analytes = len(self.analyte_ids)
        if aff.ndim != 2 or aff.shape[1] != n_analytes:
            raise ConfigError(
                f"affinities must be [S x {n_analytes}], got shape {aff.shape}")
        s = aff.shape[0]
        if base.shape != (s,):
            raise ConfigError(f"baselines must have length {s}, got {base.shape}")
        if tr.shape != (n_analytes,) or td.shape != (n_analytes,):
            raise ConfigError("tau_rise_s and tau_decay_s must have one entry per analyte")
        if np.any(tr <= 0) or np.any(td <= 0):
            raise ConfigError("kinetics constants must be positive")
        if self.interference_gamma < 0:
            raise ConfigError("interference_gamma must be >= 0")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        if self.saturation not in ("identity", "tanh"):
            raise ConfigError(f"saturation must be 'identity' or 'tanh', got {self.saturation!r}")
        names = self.channel_names or tuple(f"s{i}" for i in range(s))
        if len(names) != s:
            raise ConfigError(f"{len(names)} channel names for {s} channels")
        object.__setattr__(self, "channel_names", tuple(names))

    @property
    def n_channels(self) -> int:
        return self.affinities.shape[0]

    def analyte_index(self, analyte_id: str) -> int:
        try:
            return self.analyte_ids.index(analyte_id)
        except ValueError:
            raise UnknownAnalyteError(
                f"analyte {analyte_id!r} not in model {self.analyte_ids}") from None


@dataclass(frozen=True)
class FeatureVector:
    """Flattened [T_w x S] window in time-major order."""

    values: np.ndarray
    window_length_s: float
    provenance: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1:
            raise DimensionError(f"feature values must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("feature vector contains non-finite values")


def _rise_curves(model: AffinityModel, comp_idx, t, schedule: ExposureSchedule):
    """First-order adsorption/desorption response per mix component, in [0, 1)."""
    onset = schedule.onset_s
    t_end = schedule.exposure_end_s
    curves = np.zeros((len(comp_idx), t.size))
    for row, a in enumerate(comp_idx):
        tau_r = model.tau_rise_s[a]
        tau_d = model.tau_decay_s[a]
        during = (t >= onset) & (t < t_end)
        after = t >= t_end
        curves[row, during] = 1.0 - np.exp(-(t[during] - onset) / tau_r)
        r_end = 1.0 - np.exp(-schedule.exposure_s / tau_r)
        curves[row, after] = r_end * np.exp(-(t[after] - t_end) / tau_d)
    return curves


def simulate_trial(mix: AnalyteMix, model: AffinityModel,
                   schedule: ExposureSchedule, sample_rate_hz: float,
                   rng_seed: int) -> SensorTrace:
    """Simulate one exposure trial.

    Channel s reads baseline(s) + saturate(sum_a conc_a * affinity[s,a] *
    rise_a(t)) + interference + gaussian noise. The interference term is
    gamma * prod_a conc_a * affinity[s,a] * rise_a(t) for double mixes and
    zero for singles. Deterministic given rng_seed.
    """
    schedule.validate()
    if not sample_rate_hz > 0:
        raise ConfigError(f"sample_rate_hz must be positive, got {sample_rate_hz}")
    comp_idx = [model.analyte_index(a) for a in mix.analyte_ids]
    concs = np.array([c for _, c in mix.components])

    n = int(round(schedule.total_s * sample_rate_hz))
    if n < 1:
        raise ScheduleError("schedule too short for the sample rate")
    t = np.arange(n) / sample_rate_hz

    curves = _rise_curves(model, comp_idx, t, schedule)
    amps = model.affinities[:, comp_idx] * concs[None, :]   # [S x n_comp]
    signal = amps @ curves                                   # [S x T]
    if model.saturation == "tanh":
        scale = model.saturation_scale
        signal = scale * np.tanh(signal / scale)
    if len(comp_idx) == 2 and model.interference_gamma > 0:
        signal = signal + model.interference_gamma * (
            (amps[:, 0:1] * curves[0][None, :]) * (amps[:, 1:2] * curves[1][None, :]))

    values = model.baselines[None, :] + signal.T
    if model.noise_sigma > 0:
        rng = np.random.default_rng(int(rng_seed))
        values = values + rng.normal(0.0, model.noise_sigma, size=values.shape)
    return SensorTrace(sample_rate_hz=sample_rate_hz, t0_s=0.0,
                       values=values, channel_names=model.channel_names)


def zscore(trace: SensorTrace) -> SensorTrace:
    """Center and scale each channel by its own mean and population std.

    A channel with std below 1e-12 maps to all zeros and records a
    ConstantChannelWarning; simulated baseline-only channels are
    legitimate inputs, so this is not an error.
    """
    if trace.n_samples < 2:
        raise DimensionError("z-scoring needs at least 2 samples per channel")
    v = trace.values
    mean = v.mean(axis=0)
    std = v.std(axis=0)
    flat = std < ZSCORE_STD_FLOOR
    if np.any(flat):
        names = [trace.channel_names[i] for i in np.flatnonzero(flat)]
        warnings.warn(f"constant channels z-scored to zeros: {names}",
                      ConstantChannelWarning, stacklevel=2)
    safe = np.where(flat, 1.0, std)
    out = (v - mean[None, :]) / safe[None, :]
    out[:, flat] = 0.0
    return SensorTrace(trace.sample_rate_hz, trace.t0_s, out, trace.channel_names)


def crop_window(trace: SensorTrace, start_s: float, length_s: float) -> SensorTrace:
    """Sub-trace of length_s starting at absolute time start_s."""
    rate = trace.sample_rate_hz
    start = int(round((start_s - trace.t0_s) * rate))
    count = int(round(length_s * rate))
    if count < 1:
        raise WindowRangeError(f"window of {length_s} s has no samples at {rate} Hz")
    if start < 0 or start + count > trace.n_samples:
        raise WindowRangeError(
            f"window [{start_s}, {start_s + length_s}] s outside trace "
            f"[{trace.t0_s}, {trace.t0_s + trace.duration_s}] s")
    return SensorTrace(rate, trace.t0_s + start / rate,
                       trace.values[start:start + count].copy(), trace.channel_names)


def extract_window(trace: SensorTrace, onset_s: float, pre_onset_s: float,
                   length_s: float) -> FeatureVector:
    """Flatten the [T_w x S] sub-matrix starting pre_onset_s before onset.

    Time-major order: all channels at step 0, then step 1, and so on.
    T_w = round(length_s * sample_rate_hz).
    """
    if not 0 <= pre_onset_s < length_s:
        raise WindowRangeError(
            f"need length_s > pre_onset_s >= 0, got {length_s}, {pre_onset_s}")
    sub = crop_window(trace, onset_s - pre_onset_s, length_s)
    return FeatureVector(values=sub.values.reshape(-1),
                         window_length_s=length_s)


def superpose(trace_a: SensorTrace, trace_b: SensorTrace) -> SensorTrace:
    """Elementwise sum with trace_b's channel baselines removed.

    The baseline is taken from each channel's first sample, which is exact
    whenever the trace starts in the pre-onset phase without noise. Used
    as the oracle for additive (gamma = 0) double-analyte simulation.
    """
    if trace_a.values.shape != trace_b.values.shape:
        raise DimensionError(
            f"shape mismatch {trace_a.values.shape} vs {trace_b.values.shape}")
    if trace_a.sample_rate_hz != trace_b.sample_rate_hz:
        raise DimensionError("sample rates differ")
    values = trace_a.values + trace_b.values - trace_b.values[0:1, :]
    return SensorTrace(trace_a.sample_rate_hz, trace_a.t0_s, values,
                       trace_a.channel_names)
