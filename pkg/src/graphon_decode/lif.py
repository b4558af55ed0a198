"""Conductance-based leaky integrate-and-fire network with synaptic depression.

Forward-Euler integration on a fixed step.  Units: time in ms, voltage in mV,
conductance in mS, current in uA, resistance in kOhm (so r_in * g is
dimensionless and r_in * I is mV; stimulus amplitudes are given in nA and
converted internally).

Each neuron j keeps one aggregated synaptic conductance g_j.  A spike of
presynaptic neuron i at time t adds (g_max / S_j) * R_i to g_j at time
t + delay, where S_j is j's in-degree and R_i is i's depression resource at
emission time (read before the depression update).  R drops by the factor
beta at each spike of its neuron and otherwise relaxes to 1 with time
constant tau_recovery.  Spontaneous synaptic noise is a Poisson stream per
neuron at rate poisson_rate * S_j, feeding g_j with unit resource weight and
without touching any depression state.

Refractoriness is an absolute clamp: after a spike the membrane is held at
v_reset for refractory_ms.  A spike-triggered adaptation conductance with its
own reversal and decay is available and disabled by default (increment 0).
Both are deliberately simple, fully configurable stand-ins for biophysically
detailed after-spike currents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, ParameterError, ParseError
from .sbm import AdjacencyMatrix, _readonly


@dataclass(frozen=True)
class NeuronParams:
    """Membrane parameters; defaults give a 20 mV threshold gap from rest."""

    tau_mem: float = 20.0
    e_leak: float = -74.0
    r_in: float = 4.0e4
    v_threshold: float = -54.0
    v_reset: float = -60.0

    def __post_init__(self):
        if self.tau_mem <= 0:
            raise ParameterError(f"tau_mem must be positive, got {self.tau_mem}")
        if self.v_reset >= self.v_threshold:
            raise ParameterError("v_reset must lie below v_threshold")


@dataclass(frozen=True)
class SynapseParams:
    e_syn: float = 0.0
    g_max: float = 3.5e-4
    tau_g: float = 5.0
    beta: float = 0.8
    tau_recovery: float = 2.0e4
    delay: float = 2.8
    poisson_rate: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        for name in ("tau_g", "tau_recovery", "delay"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.poisson_rate < 0:
            raise ParameterError("poisson_rate must be nonnegative")


@dataclass(frozen=True)
class AuxCurrentParams:
    """After-spike machinery: absolute refractory clamp plus an optional
    spike-incremented adaptation conductance (off when the increment is 0)."""

    refractory_ms: float = 2.0
    kca_increment: float = 0.0
    kca_tau: float = 80.0
    kca_reversal: float = -80.0

    def __post_init__(self):
        if self.refractory_ms < 0:
            raise ParameterError("refractory_ms must be nonnegative")
        if self.kca_tau <= 0:
            raise ParameterError("kca_tau must be positive")


@dataclass(frozen=True)
class StimulusPulse:
    """Square current pulse of ``amplitude`` nA into the target neurons."""

    targets: tuple[int, ...]
    onset: float
    duration: float = 5.0
    amplitude: float = 2.5

    def __post_init__(self):
        if self.duration <= 0:
            raise ParameterError("pulse duration must be positive")
        if self.onset < 0:
            raise ParameterError("pulse onset must be nonnegative")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))


@dataclass(frozen=True)
class InitialState:
    """Start values; v0 of None means the leak reversal."""

    v0: float | None = None
    g0: float = 0.0
    r0: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.r0 <= 1.0:
            raise ParameterError("r0 must lie in (0, 1]")
        if self.g0 < 0:
            raise ParameterError("g0 must be nonnegative")


@dataclass(frozen=True)
class TrialTrace:
    """Per-step state history for diagnostics; index 0 is the initial state."""

    times: np.ndarray
    v: np.ndarray
    g_syn: np.ndarray
    resource: np.ndarray


@dataclass(frozen=True)
class SpikeRaster:
    """Sorted spike times (ms) per neuron for one trial."""

    spikes: tuple[np.ndarray, ...]
    duration: float
    seed: int
    refractory_ms: float = 0.0
    trace: TrialTrace | None = field(default=None, compare=False)

    def __post_init__(self):
        for i, times in enumerate(self.spikes):
            if times.size == 0:
                continue
            if times[0] < 0 or times[-1] > self.duration + 1e-9:
                raise ContractError(f"neuron {i}: spike time outside [0, duration]")
            gaps = np.diff(times)
            if np.any(gaps <= 0):
                raise ContractError(f"neuron {i}: spike times must be strictly increasing")
            if self.refractory_ms > 0 and np.any(gaps < self.refractory_ms - 1e-9):
                raise ContractError(f"neuron {i}: spikes closer than the refractory period")

    def counts(self, start: float, stop: float) -> np.ndarray:
        """Spike counts per neuron in the half-open window [start, stop)."""
        return np.array(
            [int(np.sum((t >= start) & (t < stop))) for t in self.spikes], dtype=float
        )

    @property
    def total_spikes(self) -> int:
        return int(sum(t.size for t in self.spikes))


def scaling_factors(adjacency: AdjacencyMatrix, zero_degree: str = "error") -> np.ndarray:
    """Per-neuron in-degree, used to normalize synaptic increments.

    A graph with isolated neurons is rejected unless ``zero_degree`` is
    "isolate", in which case those neurons simply receive no synaptic input.
    """
    if zero_degree not in ("error", "isolate"):
        raise ParameterError(f"unknown zero_degree policy {zero_degree!r}")
    s = adjacency.entries.sum(axis=1).astype(float)
    if zero_degree == "error" and np.any(s == 0):
        bad = np.nonzero(s == 0)[0]
        raise ParameterError(
            f"neurons {bad[:5].tolist()} have no incoming edges; "
            "use zero_degree='isolate' to allow this"
        )
    return s


def run_trial(
    adjacency: AdjacencyMatrix,
    neuron: NeuronParams = NeuronParams(),
    synapse: SynapseParams = SynapseParams(),
    aux: AuxCurrentParams = AuxCurrentParams(),
    stimulus: StimulusPulse | None = None,
    duration: float = 150.0,
    dt: float = 0.1,
    seed: int = 0,
    initial: InitialState = InitialState(),
    zero_degree: str = "error",
    record_trace: bool = False,
) -> SpikeRaster:
    """Simulate one trial and return the spike raster.

    The step dt must divide the conduction delay exactly (to 1e-9 relative),
    and with a stimulus present the trial must extend at least 100 ms past its
    onset so the standard counting window fits.  Identical arguments and seed
    give identical rasters.
    """
    size = adjacency.size
    if size == 0:
        raise ParameterError("empty network")
    if dt <= 0:
        raise ParameterError("dt must be positive")
    delay_steps = round(synapse.delay / dt)
    if delay_steps < 1 or abs(delay_steps * dt - synapse.delay) > 1e-9 * synapse.delay:
        raise ParameterError(
            f"dt={dt} must divide the conduction delay {synapse.delay} ms exactly"
        )
    if stimulus is not None:
        if duration < stimulus.onset + 100.0 - 1e-9:
            raise ParameterError("duration must reach at least 100 ms past stimulus onset")
        if any(t < 0 or t >= size for t in stimulus.targets):
            raise ParameterError("stimulus targets outside the network")

    steps = int(math.floor(duration / dt + 1e-9))
    weights = adjacency.entries.astype(float)
    s = scaling_factors(adjacency, zero_degree)
    has_input = s > 0
    unit_inc = np.where(has_input, synapse.g_max / np.where(has_input, s, 1.0), 0.0)
    noise_lam = synapse.poisson_rate * s * dt * 1e-3
    draw_noise = synapse.poisson_rate > 0

    rng = np.random.default_rng(np.random.SeedSequence(seed))

    v = np.full(size, neuron.e_leak if initial.v0 is None else initial.v0, dtype=float)
    g = np.full(size, initial.g0, dtype=float)
    g_kca = np.zeros(size)
    resource = np.full(size, initial.r0, dtype=float)
    refract_until = np.full(size, -np.inf)

    ring_len = delay_steps + 2
    ring = np.zeros((ring_len, size))

    if stimulus is not None:
        stim_idx = np.array(stimulus.targets, dtype=int)
        amp_ua = stimulus.amplitude * 1e-3
        stim_start, stim_stop = stimulus.onset, stimulus.onset + stimulus.duration
    else:
        stim_idx = np.empty(0, dtype=int)
        amp_ua = 0.0
        stim_start = stim_stop = -1.0

    spike_times: list[list[float]] = [[] for _ in range(size)]
    if record_trace:
        times = np.arange(steps + 1) * dt
        trace_v = np.empty((steps + 1, size))
        trace_g = np.empty((steps + 1, size))
        trace_r = np.empty((steps + 1, size))
        trace_v[0], trace_g[0], trace_r[0] = v, g, resource

    inv_tau_mem = dt / neuron.tau_mem
    g_decay = dt / synapse.tau_g
    kca_decay = dt / aux.kca_tau
    r_relax = dt / synapse.tau_recovery

    for k in range(steps):
        t = k * dt
        slot = k % ring_len

        g *= 1.0 - g_decay
        g += ring[slot]
        ring[slot] = 0.0
        if draw_noise:
            counts = rng.poisson(noise_lam)
            if counts.any():
                g += counts * unit_inc
        g_kca *= 1.0 - kca_decay

        drive = g * (synapse.e_syn - v) + g_kca * (aux.kca_reversal - v)
        if stim_start <= t < stim_stop:
            drive[stim_idx] += amp_ua

        resource += r_relax * (1.0 - resource)

        active = t >= refract_until
        v = np.where(
            active,
            v + inv_tau_mem * (neuron.e_leak - v + neuron.r_in * drive),
            neuron.v_reset,
        )

        spiked = active & (v >= neuron.v_threshold)
        if spiked.any():
            t_spike = (k + 1) * dt
            ids = np.nonzero(spiked)[0]
            for i in ids:
                spike_times[i].append(t_spike)
            emitted = np.where(spiked, resource, 0.0)
            ring[(k + delay_steps + 1) % ring_len] += unit_inc * (weights @ emitted)
            resource[ids] *= synapse.beta
            v[ids] = neuron.v_reset
            g_kca[ids] += aux.kca_increment
            refract_until[ids] = t_spike + aux.refractory_ms

        if record_trace:
            trace_v[k + 1], trace_g[k + 1], trace_r[k + 1] = v, g, resource

    trace = None
    if record_trace:
        trace = TrialTrace(
            times=_readonly(times),
            v=_readonly(trace_v),
            g_syn=_readonly(trace_g),
            resource=_readonly(trace_r),
        )
    spikes = tuple(_readonly(np.array(ts)) for ts in spike_times)
    return SpikeRaster(
        spikes=spikes,
        duration=duration,
        seed=seed,
        refractory_ms=aux.refractory_ms,
        trace=trace,
    )


def write_raster_csv(raster: SpikeRaster, path, meta: dict | None = None) -> None:
    """neuron_id,spike_time_ms rows preceded by '#'-prefixed metadata lines."""
    lines = [f"# nodes={len(raster.spikes)}"]
    lines.append(f"# duration_ms={repr(float(raster.duration))}")
    lines.append(f"# seed={raster.seed}")
    lines.append(f"# refractory_ms={repr(float(raster.refractory_ms))}")
    for key in sorted(meta or {}):
        lines.append(f"# {key}={meta[key]}")
    lines.append("neuron_id,spike_time_ms")
    for i, times in enumerate(raster.spikes):
        lines.extend(f"{i},{repr(float(t))}" for t in times)
    Path(path).write_text("\n".join(lines) + "\n")


def read_raster_csv(path) -> tuple[SpikeRaster, dict]:
    """Inverse of :func:`write_raster_csv`; returns the raster and metadata."""
    meta: dict[str, str] = {}
    rows: list[tuple[int, float]] = []
    header_seen = False
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line.lstrip("# ").partition("=")
            meta[key] = value
            continue
        if not header_seen:
            if line != "neuron_id,spike_time_ms":
                raise ParseError(f"{path}: line {ln}: unexpected header {line!r}")
            header_seen = True
            continue
        try:
            nid, t = line.split(",")
            rows.append((int(nid), float(t)))
        except ValueError as exc:
            raise ParseError(f"{path}: line {ln}: bad row {line!r}") from exc
    try:
        size = int(meta["nodes"])
        duration = float(meta["duration_ms"])
        seed = int(meta["seed"])
        refractory = float(meta.get("refractory_ms", 0.0))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: missing or malformed metadata header") from exc
    spikes: list[list[float]] = [[] for _ in range(size)]
    for nid, t in rows:
        if not 0 <= nid < size:
            raise ParseError(f"{path}: neuron id {nid} out of range")
        spikes[nid].append(t)
    arrays = tuple(_readonly(np.array(sorted(ts))) for ts in spikes)
    raster = SpikeRaster(
        spikes=arrays, duration=duration, seed=seed, refractory_ms=refractory
    )
    return raster, meta
