import itertools
import math

import numpy as np
import pytest

from kp40.analysis import estimate_probabilities
from kp40.ksset import canonical_set, mermin_subset
from kp40.simulate import (
    CHUNK,
    DEFAULT_INITIAL_RAYS,
    IDEAL_NOISE,
    CountRecord,
    NoiseModel,
    PulseRun,
    convergence_trace,
    derive_seed,
    expected_record,
    ground_truth_probabilities,
    mask_to_ray,
    mermin_pool,
    ray_to_mask,
    run_exclusivity_campaign,
    run_ks_experiment,
    snap_checkpoints,
    substream,
)
from kp40.rays import same_direction
from kp40.states import profile


# ------------------------------------------------------------- randomness plumbing

def test_substream_is_deterministic_and_path_separated():
    a = substream(7, "pulse", 0).random(4)
    b = substream(7, "pulse", 0).random(4)
    c = substream(7, "pulse", 1).random(4)
    d = substream(8, "pulse", 0).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_derive_seed_is_stable():
    assert derive_seed(3, "x") == derive_seed(3, "x")
    assert derive_seed(3, "x") != derive_seed(3, "y")
    assert derive_seed(3, "x", 1) != derive_seed(3, "x", 2)


# ------------------------------------------------------------- slit masks

def test_mask_round_trip_over_all_forty_rays(kset):
    for i in range(1, 41):
        r = kset.ray(i)
        back = mask_to_ray(ray_to_mask(r))
        assert same_direction(back, r)


def test_mask_amplitudes_are_normalized(kset):
    for i in (1, 17, 40):
        a = ray_to_mask(kset.ray(i)).amplitudes()
        assert np.vdot(a, a).real == pytest.approx(1.0)


def test_mask_rejects_zero_ray():
    with pytest.raises(ValueError):
        ray_to_mask((0,) * 8)


# ------------------------------------------------------------- config objects

def test_noise_model_validation_and_round_trip():
    n = NoiseModel(amplitude_jitter=0.05, phase_jitter=0.2, background=0.003, efficiency=0.4)
    assert NoiseModel.from_json(n.to_json()) == n
    with pytest.raises(ValueError):
        NoiseModel(phase_jitter=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(background=1.0)
    with pytest.raises(ValueError):
        NoiseModel(efficiency=0.0)
    with pytest.raises(ValueError):
        NoiseModel(efficiency=1.5)


def test_pulse_run_validation():
    with pytest.raises(ValueError):
        PulseRun(seed=1, n_pulses=0)
    with pytest.raises(ValueError):
        PulseRun(seed=1, n_pulses=10, mu=0.0)
    with pytest.raises(ValueError):
        PulseRun(seed=1, n_pulses=10, projector_pool=())
    with pytest.raises(ValueError):
        PulseRun(seed=1, n_pulses=10, projector_pool=(1, 1, 2))
    with pytest.raises(ValueError):
        PulseRun(seed=1, n_pulses=10, projector_pool=(0, 1))


def test_mermin_pool_matches_subset():
    assert mermin_pool() == mermin_subset()


def test_count_record_round_trip_and_validation():
    run = PulseRun(seed=11, n_pulses=60_000)
    rec = run_ks_experiment("ghz", IDEAL_NOISE, run)
    back = CountRecord.from_json(rec.to_json())
    assert back == rec
    assert rec.n_pulses() == 60_000
    bad = rec.to_json()
    first = str(rec.projector_pool[0])
    bad["counts"][first] = bad["pulses_per_projector"][first] + 1
    with pytest.raises(ValueError):
        CountRecord.from_json(bad)


# ------------------------------------------------------------- runs

def test_runs_are_reproducible_and_seed_sensitive():
    run = PulseRun(seed=5, n_pulses=80_000)
    a = run_ks_experiment("w", IDEAL_NOISE, run)
    b = run_ks_experiment("w", IDEAL_NOISE, run)
    c = run_ks_experiment("w", IDEAL_NOISE, PulseRun(seed=6, n_pulses=80_000))
    assert a == b
    assert a.counts != c.counts


def test_pulse_allocation_is_complete_and_roughly_uniform():
    run = PulseRun(seed=2, n_pulses=200_000)
    rec = run_ks_experiment("ghz", IDEAL_NOISE, run)
    alloc = rec.pulses_per_projector
    assert sum(alloc.values()) == 200_000
    lo, hi = min(alloc.values()), max(alloc.values())
    mean = 200_000 / 40
    assert lo > mean * 0.8 and hi < mean * 1.2


def test_ideal_noise_estimates_match_exact_profile():
    run = PulseRun(seed=3, n_pulses=400_000)
    rec = run_ks_experiment("ghz", IDEAL_NOISE, run)
    est = estimate_probabilities(rec)
    exact = profile("ghz").probs
    for i, (p, err) in est.probabilities.items():
        n = rec.pulses_per_projector[i]
        se = max(err, math.sqrt(max(float(exact[i]) * (1 - float(exact[i])), 1e-12) / n))
        assert abs(p - float(exact[i])) < 5 * se + 1e-9


def test_ideal_noise_estimates_track_exact_profile_over_many_seeds():
    # without jitter or background the orthogonal projectors must read exactly
    # zero, and every other estimate should sit inside four propagated standard
    # errors; a seed fails if any of the 40 rays falls outside
    exact = {i: float(v) for i, v in profile("w").probs.items()}
    good = 0
    for seed in range(100):
        rec = run_ks_experiment("w", IDEAL_NOISE, PulseRun(seed=seed, n_pulses=200_000))
        est = estimate_probabilities(rec)
        ok = True
        for i, (p, err) in est.probabilities.items():
            if exact[i] == 0.0:
                ok = ok and p == 0.0
            else:
                ok = ok and abs(p - exact[i]) <= 4 * err
        good += ok
    assert good >= 95


def test_estimator_converges_to_ground_truth_in_the_infinite_limit():
    noise = NoiseModel(amplitude_jitter=0.06, phase_jitter=0.25, background=0.002, efficiency=0.5)
    run = PulseRun(seed=9, n_pulses=130_000)
    est = estimate_probabilities(expected_record("ghz", noise, run))
    truth = ground_truth_probabilities("ghz", noise, run)
    for i, (p, _) in est.probabilities.items():
        assert p == pytest.approx(truth[i], abs=1e-9)


def test_background_raises_epsilon():
    template = PulseRun(seed=4, n_pulses=60_000)
    eps0, _ = run_exclusivity_campaign(run=template)
    noisy = NoiseModel(background=0.01, efficiency=0.5)
    eps1, _ = run_exclusivity_campaign(noise=noisy, run=template)
    assert eps0 == pytest.approx(0.0, abs=1e-6)    # exact orthogonality, no background
    assert eps1 > 0.01


def test_phase_jitter_raises_epsilon():
    template = PulseRun(seed=4, n_pulses=60_000)
    lo, _ = run_exclusivity_campaign(noise=NoiseModel(phase_jitter=0.05), run=template)
    hi, _ = run_exclusivity_campaign(noise=NoiseModel(phase_jitter=0.4), run=template)
    assert hi > lo


def _mean_epsilon(noise: NoiseModel, seeds) -> float:
    total = 0.0
    for seed in seeds:
        eps, _ = run_exclusivity_campaign(
            noise=noise, run=PulseRun(seed=seed, n_pulses=20_000)
        )
        total += eps
    return total / len(seeds)


@pytest.mark.parametrize("knob,levels", [
    ("background", (0.0, 0.004, 0.008)),
    ("phase_jitter", (0.0, 0.2, 0.4)),
])
def test_epsilon_is_monotone_in_each_noise_knob(knob, levels):
    seeds = range(20)
    means = [_mean_epsilon(NoiseModel(**{knob: v}), seeds) for v in levels]
    assert means[0] <= means[1] <= means[2]


def test_campaign_covers_all_184_orthogonal_pairs(graph):
    template = PulseRun(seed=1, n_pulses=40_000)
    eps, pairs = run_exclusivity_campaign(run=template)
    assert len(pairs) == 8 * 23 == 184
    assert {p.initial for p in pairs} == set(DEFAULT_INITIAL_RAYS)
    for p in pairs:
        assert graph.adjacent(p.initial, p.partner)
    assert eps == pytest.approx(sum(p.probability for p in pairs) / 184)


def test_campaign_requires_a_run_template():
    with pytest.raises(ValueError):
        run_exclusivity_campaign()


# ------------------------------------------------------------- traces

def test_snap_checkpoints():
    assert snap_checkpoints([1, 40_000, 70_000], 100_000) == (CHUNK, 2 * CHUNK, 3 * CHUNK, 100_000)
    assert snap_checkpoints([100], 50) == (50,)
    with pytest.raises(ValueError):
        snap_checkpoints([0, 10], 100)


def test_trace_final_point_matches_direct_run():
    run = PulseRun(seed=12, n_pulses=100_000)
    trace = convergence_trace("ghz", IDEAL_NOISE, run, [20_000, 100_000])
    direct = run_ks_experiment("ghz", IDEAL_NOISE, run)
    assert trace.record == direct
    est = estimate_probabilities(direct)
    last = trace.points[-1]
    assert last.pulses == 100_000
    assert last.sigma_est == est.sigma_est
    assert last.S_est == est.S_est


def test_trace_rejects_decreasing_checkpoints():
    run = PulseRun(seed=12, n_pulses=100_000)
    with pytest.raises(ValueError):
        convergence_trace("ghz", IDEAL_NOISE, run, [50_000, 20_000])


def test_trace_error_shrinks_with_pulses():
    # Poisson scaling with 25% slack: err(t2) <= err(t1) * sqrt(t1/t2) * 1.25
    run = PulseRun(seed=13, n_pulses=524_288)
    trace = convergence_trace("w", IDEAL_NOISE, run, [65_536, 131_072, 262_144, 524_288])
    for which in ("sigma_err", "S_err"):
        pts = [(p.pulses, getattr(p, which)) for p in trace.points]
        for (t1, e1), (t2, e2) in itertools.combinations(pts, 2):
            assert e2 <= e1 * math.sqrt(t1 / t2) * 1.25
