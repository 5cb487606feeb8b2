"""Estimators and figures of merit for simulated count records."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .bounds import corrected_S_bound, corrected_sigma_bound
from .ksset import canonical_set, mermin_subset
from .simulate import CountRecord
from .states import ProbabilityProfile


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateSet:
    """Flux-normalized probability estimates with standard errors, plus the two sums."""

    probabilities: dict[int, tuple[float, float]]    # index -> (estimate, error)
    sigma_est: float
    sigma_err: float
    S_est: float
    S_err: float

    def basis_sums(self) -> dict[int, tuple[float, float]]:
        s = canonical_set()
        out: dict[int, list[float]] = {}
        for i, (p, err) in self.probabilities.items():
            b = s.basis_of(i)
            tot = out.setdefault(b, [0.0, 0.0])
            tot[0] += p
            tot[1] += err * err
        return {b: (tot[0], math.sqrt(tot[1])) for b, tot in sorted(out.items())}

    def to_json(self) -> dict:
        return {
            "probabilities": {
                str(i): {"estimate": p, "error": e}
                for i, (p, e) in sorted(self.probabilities.items())
            },
            "sigma_est": self.sigma_est,
            "sigma_err": self.sigma_err,
            "S_est": self.S_est,
            "S_err": self.S_err,
        }


def estimate_probabilities(r: CountRecord) -> EstimateSet:
    """P_i = (counts_i / pulses_i) * (pulses_cal / flux_basis), errors by Poisson
    propagation (sigma_count = sqrt(count)), sums with errors in quadrature."""
    s = canonical_set()
    probs: dict[int, tuple[float, float]] = {}
    for i in r.projector_pool:
        b = s.basis_of(i)
        flux = r.flux_calibration[b]
        if flux <= 0:
            raise EstimationError(f"zero calibration flux for basis {b}")
        n_i = r.pulses_per_projector[i]
        if n_i <= 0:
            raise EstimationError(f"no pulses allocated to projector {i}")
        n_cal = r.flux_pulses[b]
        c = r.counts[i]
        scale = n_cal / (n_i * flux)
        p = c * scale
        var = scale * scale * c + (c * n_cal / (n_i * flux * flux)) ** 2 * flux
        probs[i] = (p, math.sqrt(var))

    sigma_est = sum(p for p, _ in probs.values())
    sigma_err = math.sqrt(sum(e * e for _, e in probs.values()))
    in_s = [i for i in mermin_subset() if i in probs]
    S_est = sum(probs[i][0] for i in in_s)
    S_err = math.sqrt(sum(probs[i][1] ** 2 for i in in_s))
    return EstimateSet(
        probabilities=probs,
        sigma_est=sigma_est,
        sigma_err=sigma_err,
        S_est=S_est,
        S_err=S_err,
    )


@dataclass(frozen=True)
class SimilarityReport:
    F: float
    per_basis: dict[int, float]
    p_hash: str
    q_hash: str
    grouping: str    # "per-basis" or "global"

    def to_json(self) -> dict:
        return {
            "F": self.F,
            "per_basis": {str(b): f for b, f in sorted(self.per_basis.items())},
            "p_hash": self.p_hash,
            "q_hash": self.q_hash,
            "grouping": self.grouping,
        }


def _as_prob_dict(x) -> dict[int, float]:
    if isinstance(x, EstimateSet):
        return {i: p for i, (p, _) in x.probabilities.items()}
    if isinstance(x, ProbabilityProfile):
        return {i: float(v) for i, v in x.probs.items()}
    if isinstance(x, Mapping):
        return {int(k): float(v) for k, v in x.items()}
    raise TypeError(f"cannot interpret {type(x).__name__} as a probability table")


def _dist_hash(groups: dict[int, dict[int, float]]) -> str:
    payload = json.dumps(
        {str(b): {str(i): round(v, 12) for i, v in sorted(d.items())} for b, d in sorted(groups.items())},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def bhattacharyya(p, q, per_basis: bool = True) -> SimilarityReport:
    """Similarity F between two probability tables over the same ray indices.

    Default grouping: normalize within each basis group, F_b = sum_i sqrt(p_i q_i),
    F = mean of F_b over the groups.  The global variant normalizes over all
    indices at once and reports a single coefficient.
    """
    pd = _as_prob_dict(p)
    qd = _as_prob_dict(q)
    if set(pd) != set(qd):
        raise ValueError("probability tables cover different ray indices")
    if any(v < 0 for v in pd.values()) or any(v < 0 for v in qd.values()):
        raise ValueError("probabilities must be nonnegative")

    s = canonical_set()
    if per_basis:
        groups: dict[int, list[int]] = {}
        for i in pd:
            groups.setdefault(s.basis_of(i), []).append(i)
        grouping = "per-basis"
    else:
        groups = {0: sorted(pd)}
        grouping = "global"

    def normalize(d: dict[int, float], members: list[int], b: int) -> dict[int, float]:
        total = sum(d[i] for i in members)
        if total <= 0:
            raise ValueError(f"group {b} has zero total probability")
        return {i: d[i] / total for i in members}

    per: dict[int, float] = {}
    p_norm: dict[int, dict[int, float]] = {}
    q_norm: dict[int, dict[int, float]] = {}
    for b, members in sorted(groups.items()):
        pn = normalize(pd, members, b)
        qn = normalize(qd, members, b)
        p_norm[b] = pn
        q_norm[b] = qn
        per[b] = min(1.0, sum(math.sqrt(pn[i] * qn[i]) for i in members))
    F = sum(per.values()) / len(per)
    return SimilarityReport(
        F=F,
        per_basis=per,
        p_hash=_dist_hash(p_norm),
        q_hash=_dist_hash(q_norm),
        grouping=grouping,
    )


def _bound_section(value: float, err: float, ideal: int, corrected: float, quantum: int, name: str) -> dict:
    gap = value - corrected
    margin = math.inf if err == 0 and gap > 0 else (gap / err if err > 0 else 0.0)
    if gap > 0:
        label = f"violates corrected {name} bound {corrected:.4g} by {margin:.1f} sigma"
    else:
        label = "no violation"
    return {
        "value": value,
        "error": err,
        "ideal_bound": ideal,
        "corrected_bound": corrected,
        "quantum_value": quantum,
        "margin_sigma": margin,
        "label": label,
    }


def verdict(e: EstimateSet, epsilon: float) -> dict:
    """Classify the estimated sums against ideal bounds, corrected bounds, and quantum values."""
    full_pool = len(e.probabilities) == 40
    out: dict = {"epsilon": float(epsilon)}
    out["sigma"] = (
        _bound_section(
            e.sigma_est, e.sigma_err, 4, corrected_sigma_bound(epsilon), 5, "NCHV"
        )
        if full_pool
        else None
    )
    out["S"] = _bound_section(e.S_est, e.S_err, 3, corrected_S_bound(epsilon), 4, "Mermin")
    return out


def fig3_rows(e: EstimateSet, ideal: ProbabilityProfile | None = None) -> list[dict]:
    """Plot-ready per-ray table: estimate, error, and the exact value when a profile is given."""
    s = canonical_set()
    rows = []
    for i in sorted(e.probabilities):
        p, err = e.probabilities[i]
        row = {
            "index": i,
            "basis_group": s.basis_of(i),
            "estimate": p,
            "error": err,
        }
        if ideal is not None:
            exact: Fraction = ideal.probs[i]
            row["ideal_num"] = exact.numerator
            row["ideal_den"] = exact.denominator
        rows.append(row)
    return rows


def fig4_rows(e: EstimateSet, epsilon: float) -> list[dict]:
    """Plot-ready summary table: one row per inequality sum."""
    v = verdict(e, epsilon)
    rows = []
    if v["sigma"] is not None:
        rows.append({"quantity": "sigma", **{k: v["sigma"][k] for k in
                     ("value", "error", "ideal_bound", "corrected_bound", "quantum_value")}})
    rows.append({"quantity": "S", **{k: v["S"][k] for k in
                 ("value", "error", "ideal_bound", "corrected_bound", "quantum_value")}})
    return rows
