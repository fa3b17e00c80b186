"""Trial collections, the on-disk dataset layout, and holdout hygiene.

Layout: ``trials.csv`` with one row per trial (columns trial_id,
analyte_1, conc_1, analyte_2, conc_2, onset_s, duration_s, split) and one
``signals/<trial_id>.csv`` per trial (header time_s, s0..s{S-1}).

Holdout (split=test) trials are guarded: their signal data is served only
after hyperparameters are frozen, and for file-backed datasets the files'
checksums are verified against the tags recorded at load time, so any
mutation between load and evaluation is a hard error.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError, SplitHygieneError
from .signals import (
    AnalyteMix,
    ExposureSchedule,
    SensorTrace,
    crop_window,
    extract_window,
    simulate_trial,
    zscore,
)
from .util import derive_seed, fmt

SPLITS = ("train", "val", "test")


@dataclass
class Trial:
    trial_id: str
    mix: AnalyteMix
    onset_s: float
    duration_s: float
    split: str
    trace: SensorTrace | None = None


class Dataset:
    """Train/val trials plus a guarded holdout of double-analyte trials."""

    def __init__(self, train, val, holdout, source_dir=None, holdout_checksums=None):
        self.train: list[Trial] = list(train)
        self.val: list[Trial] = list(val)
        self._holdout: list[Trial] = list(holdout)
        self.source_dir = Path(source_dir) if source_dir else None
        self._holdout_checksums = dict(holdout_checksums or {})
        self.frozen = False

    def freeze(self) -> None:
        """Mark hyperparameters as frozen; holdout reads are now allowed."""
        self.frozen = True

    @property
    def n_holdout(self) -> int:
        return len(self._holdout)

    def holdout_trials(self) -> list[Trial]:
        if not self.frozen:
            raise SplitHygieneError(
                "holdout doubles requested before hyperparameters were frozen")
        if self.source_dir is not None:
            self._verify_holdout_files()
        return self._holdout

    def _verify_holdout_files(self) -> None:
        for trial in self._holdout:
            path = self.source_dir / "signals" / f"{trial.trial_id}.csv"
            try:
                digest = hashlib.sha256(path.read_bytes()).hexdigest()
            except OSError as e:
                raise SplitHygieneError(f"holdout file unreadable: {path}: {e}") from e
            if digest != self._holdout_checksums.get(trial.trial_id):
                raise SplitHygieneError(
                    f"holdout file changed since split tags were recorded: {path}")
            if trial.trace is None:
                trial.trace = _read_signal_csv(path)


def build_affinity_model(sim) -> "AffinityModel":
    """Deterministic sensor array from the simulator config."""
    from .signals import AffinityModel

    n_analytes = len(sim.analytes)
    rng = np.random.default_rng(derive_seed(sim.sensor_seed, "affinities"))
    affinities = rng.uniform(sim.affinity_low, sim.affinity_high,
                             (sim.n_sensors, n_analytes))
    baselines = np.linspace(0.8, 2.2, sim.n_sensors)
    return AffinityModel(
        analyte_ids=tuple(sim.analytes),
        affinities=affinities,
        baselines=baselines,
        tau_rise_s=np.asarray(sim.tau_rise_s, dtype=np.float64),
        tau_decay_s=np.asarray(sim.tau_decay_s, dtype=np.float64),
        interference_gamma=sim.interference_gamma,
        noise_sigma=sim.noise_sigma,
        seed=sim.sensor_seed,
        saturation=sim.saturation,
        saturation_scale=sim.saturation_scale,
    )


def build_world(sim, master_seed: int) -> Dataset:
    """Simulate the full synthetic dataset for one master seed.

    Singles (every analyte x concentration x replicate) form the train and
    val splits; the test split holds double-analyte exposures cycling over
    all analyte pairs with seeded concentration draws.
    """
    model = build_affinity_model(sim)
    schedule = ExposureSchedule(sim.baseline_s, sim.exposure_s, sim.desorption_s)
    schedule.validate()

    def one(trial_id, components, split):
        mix = AnalyteMix.make(components, sim.target_analyte)
        trace = simulate_trial(mix, model, schedule, sim.sample_rate_hz,
                               derive_seed(master_seed, "trial", trial_id))
        return Trial(trial_id, mix, schedule.onset_s, schedule.total_s, split, trace)

    train, val = [], []
    for a in sim.analytes:
        for ci, conc in enumerate(sim.concentrations):
            for rep in range(sim.n_replicates):
                train.append(one(f"tr_{a}_c{ci}_r{rep}", [(a, conc)], "train"))
            for rep in range(sim.n_val_replicates):
                val.append(one(f"va_{a}_c{ci}_r{rep}", [(a, conc)], "val"))

    pairs = list(itertools.combinations(sim.analytes, 2))
    rng = np.random.default_rng(derive_seed(master_seed, "holdout"))
    holdout = []
    concs = list(sim.concentrations)
    for i in range(sim.n_holdout_doubles):
        a, b = pairs[i % len(pairs)]
        ca = concs[rng.integers(len(concs))]
        cb = concs[rng.integers(len(concs))]
        holdout.append(one(f"te_{i:02d}_{a}{b}", [(a, ca), (b, cb)], "test"))
    return Dataset(train, val, holdout)


def _write_signal_csv(path: Path, trace: SensorTrace) -> None:
    lines = ["time_s," + ",".join(trace.channel_names)]
    times = trace.times()
    for t in range(trace.n_samples):
        row = trace.values[t]
        lines.append(fmt(times[t]) + "," + ",".join(fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_signal_csv(path: Path) -> SensorTrace:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise ParseError(f"{path}: need a header and at least 2 samples")
    header = lines[0].split(",")
    if header[0] != "time_s" or len(header) < 2:
        raise ParseError(f"{path}: line 1: expected header 'time_s, s0, ...'")
    names = tuple(h.strip() for h in header[1:])
    times, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(f"{path}: line {lineno}: expected {len(header)} cells")
        try:
            times.append(float(cells[0]))
            rows.append([float(c) for c in cells[1:]])
        except ValueError as e:
            raise ParseError(f"{path}: line {lineno}: non-numeric cell ({e})") from None
    times = np.array(times)
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ParseError(f"{path}: time column must be strictly increasing")
    rate = 1.0 / steps.mean()
    return SensorTrace(sample_rate_hz=rate, t0_s=float(times[0]),
                       values=np.array(rows), channel_names=names)


def write_dataset(ds: Dataset, out_dir) -> Path:
    """Write trials.csv and per-trial signal files; returns the directory."""
    out = Path(out_dir)
    (out / "signals").mkdir(parents=True, exist_ok=True)
    header = "trial_id,analyte_1,conc_1,analyte_2,conc_2,onset_s,duration_s,split"
    lines = [header]
    for trial in (*ds.train, *ds.val, *ds._holdout):
        comps = trial.mix.components
        a1, c1 = comps[0]
        a2, c2 = (comps[1] if len(comps) == 2 else ("", ""))
        lines.append(",".join([
            trial.trial_id, a1, fmt(c1), a2, fmt(c2) if c2 != "" else "",
            fmt(trial.onset_s), fmt(trial.duration_s), trial.split]))
        if trial.trace is None:
            raise DataError(f"trial {trial.trial_id} has no trace to write")
        _write_signal_csv(out / "signals" / f"{trial.trial_id}.csv", trial.trace)
    (out / "trials.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def load_dataset(directory, target_analyte: str) -> Dataset:
    """Load a dataset directory.

    Train and val signals are read eagerly. Test-split signals are only
    checksummed here (the split tag); their contents are parsed after
    freeze(), with the checksum re-verified at that point.
    """
    directory = Path(directory)
    trials_path = directory / "trials.csv"
    try:
        text = trials_path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {trials_path}: {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip()]
    expected = "trial_id,analyte_1,conc_1,analyte_2,conc_2,onset_s,duration_s,split"
    if not lines or lines[0] != expected:
        raise ParseError(f"{trials_path}: line 1: expected header {expected!r}")

    train, val, holdout = [], [], []
    checksums = {}
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 8:
            raise ParseError(f"{trials_path}: line {lineno}: expected 8 cells")
        trial_id, a1, c1, a2, c2, onset_s, duration_s, split = [c.strip() for c in cells]
        if trial_id in seen:
            raise ParseError(f"{trials_path}: line {lineno}: duplicate trial_id {trial_id!r}")
        seen.add(trial_id)
        if split not in SPLITS:
            raise ParseError(f"{trials_path}: line {lineno}: unknown split {split!r}")
        try:
            components = [(a1, float(c1))]
            if a2:
                components.append((a2, float(c2)))
            onset = float(onset_s)
            duration = float(duration_s)
        except ValueError as e:
            raise ParseError(f"{trials_path}: line {lineno}: {e}") from None
        mix = AnalyteMix.make(components, target_analyte)
        trial = Trial(trial_id, mix, onset, duration, split)

        signal_path = directory / "signals" / f"{trial_id}.csv"
        if split == "test":
            try:
                checksums[trial_id] = hashlib.sha256(signal_path.read_bytes()).hexdigest()
            except OSError as e:
                raise DataError(f"cannot read {signal_path}: {e}") from e
            holdout.append(trial)
        else:
            trial.trace = _read_signal_csv(signal_path)
            (train if split == "train" else val).append(trial)
    return Dataset(train, val, holdout, source_dir=directory,
                   holdout_checksums=checksums)


def featurize_trial(trial: Trial, window_s: float, pre_onset_s: float):
    """Crop the exposure window, z-score per channel within it, flatten."""
    start = trial.onset_s - pre_onset_s
    sub = crop_window(trial.trace, start, window_s)
    scored = zscore(sub)
    return extract_window(scored, onset_s=trial.onset_s,
                          pre_onset_s=pre_onset_s, length_s=window_s)


def features_and_labels(trials, window_s: float, pre_onset_s: float):
    """Feature matrix and binary labels for a list of realized trials."""
    if not trials:
        raise ConfigError("no trials to featurize")
    rows = [featurize_trial(t, window_s, pre_onset_s).values for t in trials]
    labels = np.array([t.mix.label_positive for t in trials], dtype=bool)
    return np.ascontiguousarray(np.stack(rows)), labels
