"""Pulse-level Monte Carlo of the slit-mask photon-counting experiment.

A state is encoded as an 8-slit mask (transmissivity + binary phase per slit),
each pulse is assigned a uniformly drawn projector from the run's pool, and a
detection fires with probability (1 - e^-mu) * noisy_probability.  All
randomness flows through named sha256-derived substreams of the run seed, one
per fixed-size pulse chunk, so results are bit-identical regardless of how the
chunks are scheduled.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ksset import KSSet, N_RAYS, build_graph, canonical_set, mermin_subset
from .rays import Ray, canonical_form, entries_of

DIM = 8
DEFAULT_MU = 0.14
CHUNK = 32768    # pulses per RNG substream; results never depend on scheduling across chunks
KS40_POOL: tuple[int, ...] = tuple(range(1, N_RAYS + 1))
# four named in the reference data plus one ray per remaining basis group
DEFAULT_INITIAL_RAYS: tuple[int, ...] = (1, 9, 17, 25, 27, 34, 36, 40)


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for a named substream of the master seed."""
    h = hashlib.sha256(str(int(seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return np.random.Generator(np.random.PCG64(int.from_bytes(h.digest()[:16], "little")))


def derive_seed(seed: int, *path) -> int:
    """64-bit child seed for a named sub-run."""
    h = hashlib.sha256(str(int(seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "little")


@dataclass(frozen=True)
class SlitPreparation:
    """8-slit mask: per-slit transmissivity, binary phase, and the normalization constant."""

    transmissivities: tuple[float, ...]
    phases: tuple[float, ...]
    normalization: float

    def amplitudes(self) -> np.ndarray:
        t = np.asarray(self.transmissivities)
        return self.normalization * np.sqrt(t) * np.exp(1j * np.asarray(self.phases))


def ray_to_mask(v: Ray | Sequence[int]) -> SlitPreparation:
    """Encode an integer ray: t_l = (entry_l / max|entry|)^2, phase pi for negative entries."""
    entries = entries_of(v)
    if not any(entries):
        raise ValueError("cannot encode the zero ray as a slit mask")
    peak = max(abs(e) for e in entries)
    t = tuple((e / peak) ** 2 for e in entries)
    phases = tuple(math.pi if e < 0 else 0.0 for e in entries)
    return SlitPreparation(
        transmissivities=t, phases=phases, normalization=1.0 / math.sqrt(sum(t))
    )


def mask_to_ray(prep: SlitPreparation) -> Ray:
    """Decode a noiseless mask back to the integer ray it encodes."""
    mags = [math.sqrt(t) for t in prep.transmissivities]
    signs = [-1 if math.cos(p) < 0 else 1 for p in prep.phases]
    smallest = min(m for m in mags if m > 1e-12)
    entries = tuple(
        int(round(m / smallest)) * s if m > 1e-12 else 0 for m, s in zip(mags, signs)
    )
    return canonical_form(entries)


@dataclass(frozen=True)
class NoiseModel:
    """Mask imperfections and detection parameters.

    noisy probability = clamp(efficiency * |<v_noisy|psi_noisy>|^2 + background, 0, 1),
    then scaled by the pulse-occupancy factor (1 - e^-mu).
    """

    amplitude_jitter: float = 0.0    # std-dev of multiplicative transmissivity error
    phase_jitter: float = 0.0        # std-dev (radians) of per-slit phase error
    background: float = 0.0          # per-projection false-count probability
    efficiency: float = 1.0          # overall detection scale

    def __post_init__(self):
        if self.amplitude_jitter < 0 or self.phase_jitter < 0:
            raise ValueError("jitter std-devs must be nonnegative")
        if not 0.0 <= self.background < 1.0:
            raise ValueError("background must be in [0, 1)")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")

    def to_json(self) -> dict:
        return {
            "amplitude_jitter": self.amplitude_jitter,
            "phase_jitter": self.phase_jitter,
            "background": self.background,
            "efficiency": self.efficiency,
        }

    @classmethod
    def from_json(cls, data: dict) -> "NoiseModel":
        return cls(
            amplitude_jitter=float(data["amplitude_jitter"]),
            phase_jitter=float(data["phase_jitter"]),
            background=float(data["background"]),
            efficiency=float(data["efficiency"]),
        )


IDEAL_NOISE = NoiseModel()


@dataclass(frozen=True)
class PulseRun:
    seed: int
    n_pulses: int
    mu: float = DEFAULT_MU
    projector_pool: tuple[int, ...] = KS40_POOL

    def __post_init__(self):
        if self.n_pulses <= 0:
            raise ValueError("n_pulses must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        pool = tuple(self.projector_pool)
        if not pool or len(set(pool)) != len(pool):
            raise ValueError("projector_pool must be nonempty without repeats")
        if any(not 1 <= i <= N_RAYS for i in pool):
            raise ValueError("projector_pool indices must lie in 1..40")
        object.__setattr__(self, "projector_pool", pool)


def mermin_pool() -> tuple[int, ...]:
    return mermin_subset()


@dataclass(frozen=True)
class CountRecord:
    """Detected counts per projector plus the independent per-basis flux calibration.

    counts are integers for simulated runs; the infinite-statistics limit
    (expected_record) stores exact expected values as floats.
    """

    state: tuple[int, ...]
    projector_pool: tuple[int, ...]
    counts: dict[int, float]
    pulses_per_projector: dict[int, float]    # ints for simulated runs, exact shares in the limit
    flux_calibration: dict[int, float]        # basis group -> calibration count
    flux_pulses: dict[int, int]               # basis group -> pulses in the calibration pass
    mu: float
    seed: int

    def __post_init__(self):
        for i, c in self.counts.items():
            if c > self.pulses_per_projector[i]:
                raise ValueError(f"projector {i}: count {c} exceeds its {self.pulses_per_projector[i]} pulses")

    def n_pulses(self) -> int:
        return sum(self.pulses_per_projector.values())

    def to_json(self) -> dict:
        return {
            "state": list(self.state),
            "projector_pool": list(self.projector_pool),
            "counts": {str(i): c for i, c in self.counts.items()},
            "pulses_per_projector": {str(i): p for i, p in self.pulses_per_projector.items()},
            "flux_calibration": {str(b): c for b, c in self.flux_calibration.items()},
            "flux_pulses": {str(b): p for b, p in self.flux_pulses.items()},
            "mu": self.mu,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CountRecord":
        def intkeys(d, cast):
            return {int(k): cast(v) for k, v in d.items()}

        def intish(v):
            return int(v) if float(v).is_integer() else float(v)

        return cls(
            state=tuple(int(x) for x in data["state"]),
            projector_pool=tuple(int(i) for i in data["projector_pool"]),
            counts={int(k): intish(v) for k, v in data["counts"].items()},
            pulses_per_projector=intkeys(data["pulses_per_projector"], intish),
            flux_calibration=intkeys(data["flux_calibration"], float),
            flux_pulses=intkeys(data["flux_pulses"], int),
            mu=float(data["mu"]),
            seed=int(data["seed"]),
        )


def _resolve_entries(state) -> tuple[int, ...]:
    from .states import resolve_state

    return resolve_state(state)


def _jittered_amplitudes(prep: SlitPreparation, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    # both arrays are always drawn so stream consumption never depends on the noise settings
    t_err = rng.normal(0.0, 1.0, DIM) * noise.amplitude_jitter
    p_err = rng.normal(0.0, 1.0, DIM) * noise.phase_jitter
    t = np.clip(np.asarray(prep.transmissivities) * (1.0 + t_err), 0.0, None)
    return np.sqrt(t) * np.exp(1j * (np.asarray(prep.phases) + p_err))


def _pool_masks(entries: tuple[int, ...], pool: Sequence[int], s: KSSet) -> tuple:
    return ray_to_mask(entries), tuple(ray_to_mask(s.ray(i)) for i in pool)


def _chunk_probs(
    state_mask: SlitPreparation,
    pool_masks: Sequence[SlitPreparation],
    noise: NoiseModel,
    mu: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-pulse detection probabilities for one chunk, with freshly drawn mask drift.

    Masks drift once per chunk (state first, then pool order), modeling slow
    rendering miscalibration over a long run rather than per-pulse noise.
    """
    a = _jittered_amplitudes(state_mask, noise, rng)
    a = a / np.linalg.norm(a)
    occupied = 1.0 - math.exp(-mu)
    probs = np.empty(len(pool_masks))
    for idx, mask in enumerate(pool_masks):
        b = _jittered_amplitudes(mask, noise, rng)
        b = b / np.linalg.norm(b)
        o = abs(np.vdot(b, a)) ** 2
        probs[idx] = occupied * min(1.0, max(0.0, noise.efficiency * o + noise.background))
    return probs


def ground_truth_probabilities(
    state, noise: NoiseModel, run: PulseRun, s: KSSet | None = None
) -> dict[int, float]:
    """What the flux-normalized estimator converges to for this run: the
    pulse-weighted mean over chunks of clamp(eff*o + bg) / eff."""
    s = s or canonical_set()
    entries = _resolve_entries(state)
    state_mask, pool_masks = _pool_masks(entries, run.projector_pool, s)
    occupied = 1.0 - math.exp(-run.mu)
    total = np.zeros(len(run.projector_pool))
    sizes = _chunk_sizes(run.n_pulses)
    for k, size in enumerate(sizes):
        rng = substream(run.seed, "pulse", k)
        p = _chunk_probs(state_mask, pool_masks, noise, run.mu, rng)
        total += size * (p / occupied / noise.efficiency)
    mean = total / run.n_pulses
    return {i: float(v) for i, v in zip(run.projector_pool, mean)}


def _chunk_sizes(n_pulses: int) -> list[int]:
    sizes = [CHUNK] * (n_pulses // CHUNK)
    if n_pulses % CHUNK:
        sizes.append(n_pulses % CHUNK)
    return sizes


def _draw_chunk(
    seed: int,
    k: int,
    size: int,
    state_mask: SlitPreparation,
    pool_masks: Sequence[SlitPreparation],
    noise: NoiseModel,
    mu: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One chunk's (pulses per projector, detections per projector).

    All of the chunk's randomness (mask drift, pulse allocation, detections)
    comes from one substream keyed by the chunk index, so any scheduling of
    chunks across workers reproduces identical output.
    """
    rng = substream(seed, "pulse", k)
    probs = _chunk_probs(state_mask, pool_masks, noise, mu, rng)
    alloc = rng.multinomial(size, np.full(len(probs), 1.0 / len(probs)))
    return alloc, rng.binomial(alloc, probs)


def _flux_pass(run: PulseRun, noise: NoiseModel, bases: Sequence[int]) -> tuple[dict, dict]:
    """Independent calibration: all-pass analyzer, detection probability eff*(1 - e^-mu)."""
    p_cal = noise.efficiency * (1.0 - math.exp(-run.mu))
    n_cal = max(1, run.n_pulses // len(run.projector_pool))
    flux = {
        b: int(substream(run.seed, "flux", b).binomial(n_cal, p_cal)) for b in bases
    }
    return flux, {b: n_cal for b in bases}


def run_ks_experiment(
    state, noise: NoiseModel, run: PulseRun, s: KSSet | None = None
) -> CountRecord:
    """Simulate one run: every pulse gets a uniformly drawn pool projector, detections
    are Bernoulli at (1 - e^-mu) * noisy_probability, plus an independent flux pass."""
    s = s or canonical_set()
    entries = _resolve_entries(state)
    pool = run.projector_pool
    state_mask, pool_masks = _pool_masks(entries, pool, s)

    alloc_total = np.zeros(len(pool), dtype=np.int64)
    det_total = np.zeros(len(pool), dtype=np.int64)
    for k, size in enumerate(_chunk_sizes(run.n_pulses)):
        alloc, det = _draw_chunk(run.seed, k, size, state_mask, pool_masks, noise, run.mu)
        alloc_total += alloc
        det_total += det

    bases = sorted({s.basis_of(i) for i in pool})
    flux, flux_pulses = _flux_pass(run, noise, bases)
    return CountRecord(
        state=entries,
        projector_pool=pool,
        counts={i: int(c) for i, c in zip(pool, det_total)},
        pulses_per_projector={i: int(a) for i, a in zip(pool, alloc_total)},
        flux_calibration=flux,
        flux_pulses=flux_pulses,
        mu=run.mu,
        seed=run.seed,
    )


def expected_record(
    state, noise: NoiseModel, run: PulseRun, s: KSSet | None = None
) -> CountRecord:
    """Infinite-statistics limit: counts replaced by their exact expected values
    (floats) given this seed's drift sequence, with exact uniform pulse allocation."""
    s = s or canonical_set()
    entries = _resolve_entries(state)
    pool = run.projector_pool
    state_mask, pool_masks = _pool_masks(entries, pool, s)

    expected = np.zeros(len(pool))
    for k, size in enumerate(_chunk_sizes(run.n_pulses)):
        rng = substream(run.seed, "pulse", k)
        p = _chunk_probs(state_mask, pool_masks, noise, run.mu, rng)
        expected += (size / len(pool)) * p

    share = run.n_pulses / len(pool)
    bases = sorted({s.basis_of(i) for i in pool})
    p_cal = noise.efficiency * (1.0 - math.exp(-run.mu))
    n_cal = max(1, run.n_pulses // len(pool))
    return CountRecord(
        state=entries,
        projector_pool=pool,
        counts={i: float(c) for i, c in zip(pool, expected)},
        pulses_per_projector={i: share for i in pool},
        flux_calibration={b: n_cal * p_cal for b in bases},
        flux_pulses={b: n_cal for b in bases},
        mu=run.mu,
        seed=run.seed,
    )


@dataclass(frozen=True)
class PairEstimate:
    initial: int
    partner: int
    probability: float
    error: float

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "partner": self.partner,
            "probability": self.probability,
            "error": self.error,
        }


def run_exclusivity_campaign(
    s: KSSet | None = None,
    noise: NoiseModel = IDEAL_NOISE,
    initial_rays: Sequence[int] = DEFAULT_INITIAL_RAYS,
    run: PulseRun | None = None,
) -> tuple[float, list[PairEstimate]]:
    """Prepare each initial ray as the state and measure its 23 orthogonal partners.

    Returns (epsilon, per-pair table) with epsilon the mean of all should-be-zero
    probability estimates.  Each leg is a full run with its own derived seed.
    """
    from .analysis import estimate_probabilities

    s = s or canonical_set()
    if run is None:
        raise ValueError("a PulseRun template (seed, n_pulses, mu) is required")
    g = build_graph(s)
    pairs: list[PairEstimate] = []
    for i in initial_rays:
        if not 1 <= i <= N_RAYS:
            raise ValueError(f"initial ray {i} outside 1..40")
        partners = g.neighbors(i)
        leg = PulseRun(
            seed=derive_seed(run.seed, "exclusivity", i),
            n_pulses=run.n_pulses,
            mu=run.mu,
            projector_pool=partners,
        )
        record = run_ks_experiment(s.ray(i), noise, leg, s)
        est = estimate_probabilities(record)
        for j in partners:
            p, err = est.probabilities[j]
            pairs.append(PairEstimate(initial=i, partner=j, probability=p, error=err))
    epsilon = sum(p.probability for p in pairs) / len(pairs)
    return epsilon, pairs


@dataclass(frozen=True)
class TracePoint:
    pulses: int
    sigma_est: float
    sigma_err: float
    S_est: float
    S_err: float


@dataclass(frozen=True)
class TraceResult:
    points: tuple[TracePoint, ...]
    record: CountRecord    # the full-run record; its estimates equal the last point


def snap_checkpoints(checkpoints: Sequence[int], n_pulses: int) -> tuple[int, ...]:
    """Round checkpoints up to chunk boundaries (capped at n_pulses), keeping them increasing."""
    snapped: list[int] = []
    for cp in checkpoints:
        if cp <= 0:
            raise ValueError("checkpoints must be positive")
        b = min(n_pulses, CHUNK * math.ceil(cp / CHUNK))
        if not snapped or b > snapped[-1]:
            snapped.append(b)
    if not snapped or snapped[-1] != n_pulses:
        snapped.append(n_pulses)
    return tuple(snapped)


def convergence_trace(
    state,
    noise: NoiseModel,
    run: PulseRun,
    checkpoints: Sequence[int],
    s: KSSet | None = None,
) -> TraceResult:
    """Running (pulses, sigma_est +- err, S_est +- err) at chunk-aligned checkpoints.

    The final point always sits at n_pulses, so it matches estimating the full record.
    """
    from .analysis import estimate_probabilities

    if list(checkpoints) != sorted(checkpoints):
        raise ValueError("checkpoints must be increasing")
    s = s or canonical_set()
    entries = _resolve_entries(state)
    pool = run.projector_pool
    state_mask, pool_masks = _pool_masks(entries, pool, s)
    bases = sorted({s.basis_of(i) for i in pool})
    flux, flux_pulses = _flux_pass(run, noise, bases)

    marks = snap_checkpoints(checkpoints, run.n_pulses)
    points: list[TracePoint] = []
    alloc_total = np.zeros(len(pool), dtype=np.int64)
    det_total = np.zeros(len(pool), dtype=np.int64)
    done = 0
    record = None
    for k, size in enumerate(_chunk_sizes(run.n_pulses)):
        alloc, det = _draw_chunk(run.seed, k, size, state_mask, pool_masks, noise, run.mu)
        alloc_total += alloc
        det_total += det
        done += size
        if done in marks:
            partial = CountRecord(
                state=entries,
                projector_pool=pool,
                counts={i: int(c) for i, c in zip(pool, det_total)},
                pulses_per_projector={i: int(a) for i, a in zip(pool, alloc_total)},
                flux_calibration=flux,
                flux_pulses=flux_pulses,
                mu=run.mu,
                seed=run.seed,
            )
            est = estimate_probabilities(partial)
            points.append(
                TracePoint(
                    pulses=done,
                    sigma_est=est.sigma_est,
                    sigma_err=est.sigma_err,
                    S_est=est.S_est,
                    S_err=est.S_err,
                )
            )
            if done == run.n_pulses:
                record = partial
    assert record is not None
    return TraceResult(points=tuple(points), record=record)
