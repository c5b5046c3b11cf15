"""Monte Carlo photon counting for the waveplate train under angle-setting noise.

Every trial owns a counter-based substream: trial ``t`` reads the Philox
blocks starting at counter ``t * blocks_per_trial`` under key
``(seed, stream)``. Batched and per-trial execution therefore draw identical
numbers, and any batching of trials gives the same counts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.special import ndtri

from . import qmat
from .errors import UncalibratedTrain
from .waveplate import OpticalTrain, evaluate_stage, plate_matrices, plate_matrix

MASK64 = (1 << 64) - 1
_U53 = 2.0 ** -53
_EXTRA_DRAWS = 4  # detection, dark count, dark-count side, click
_Z95 = NormalDist().inv_cdf(0.975)
CSV_COLUMNS = ("sigma_deg", "hidden", "trials", "d1", "d2", "no_click", "success", "ci_lo", "ci_hi")


@dataclass(frozen=True)
class NoiseModel:
    angle_sigma_deg: float = 0.0
    systematic_offset_deg: dict = field(default_factory=dict)
    detector_efficiency: float = 1.0
    dark_count_prob: float = 0.0

    def __post_init__(self):
        if not self.angle_sigma_deg >= 0:
            raise ValueError("angle_sigma_deg must be >= 0")
        if not 0 < self.detector_efficiency <= 1:
            raise ValueError("detector_efficiency must lie in (0, 1]")
        if not 0 <= self.dark_count_prob < 1:
            raise ValueError("dark_count_prob must lie in [0, 1)")


@dataclass(frozen=True)
class CountReport:
    trials: int
    d1_counts: int
    d2_counts: int
    no_click: int
    success_prob: float | None
    wilson_ci_95: tuple[float, float]
    seed: int
    correct_detector: str = "D1"
    hidden: str = ""
    sigma_deg: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["wilson_ci_95"] = list(self.wilson_ci_95)
        return d

    def csv_row(self) -> dict:
        return {
            "sigma_deg": self.sigma_deg, "hidden": self.hidden, "trials": self.trials,
            "d1": self.d1_counts, "d2": self.d2_counts, "no_click": self.no_click,
            "success": self.success_prob, "ci_lo": self.wilson_ci_95[0], "ci_hi": self.wilson_ci_95[1],
        }


def wilson_interval(successes: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def _require_convention(train: OpticalTrain):
    if train.convention is None:
        raise UncalibratedTrain("train has no calibrated convention")


def click_probabilities(train: OpticalTrain, hidden=None) -> tuple[float, float]:
    """Ideal ``(p_D1, p_D2)`` for ``|H>`` sent through the train; D1 sees the transmitted ``|V>``."""
    _require_convention(train)
    if hidden is not None:
        train = train.with_hidden(hidden)
    state = evaluate_stage(train.plates(), train.convention) @ qmat.KET_H
    p1, p2 = abs(state[1]) ** 2, abs(state[0]) ** 2
    return float(p1), float(p2)


def click_probabilities_batch(train: OpticalTrain, perturb_deg: np.ndarray) -> np.ndarray:
    """``p_D1`` for each row of per-plate angle perturbations, shape ``(T, n_plates)``."""
    _require_convention(train)
    plates = train.plates()
    state = np.zeros((perturb_deg.shape[0], 2), dtype=complex)
    state[:, 0] = 1.0
    for j, p in enumerate(plates):
        m = plate_matrices(p.kind, p.angle_deg + perturb_deg[:, j], train.convention)
        state = np.einsum("tij,tj->ti", m, state)
    p1 = np.abs(state[:, 1]) ** 2
    p2 = np.abs(state[:, 0]) ** 2
    return p1 / (p1 + p2)


def _blocks_per_trial(n_plates: int) -> int:
    return -(-(n_plates + _EXTRA_DRAWS) // 4)


def _key(seed: int, stream: int):
    return [int(seed) & MASK64, int(stream) & MASK64]


def _uniforms(raw: np.ndarray) -> np.ndarray:
    # 53-bit midpoint uniforms in the open interval (0, 1)
    return ((raw >> np.uint64(11)).astype(float) + 0.5) * _U53


def trial_uniforms(seed: int, stream: int, blocks: int, first_trial: int, n: int) -> np.ndarray:
    """Uniform draws of trials ``first_trial .. first_trial + n - 1``, shape ``(n, 4 * blocks)``."""
    gen = np.random.Philox(key=_key(seed, stream), counter=[first_trial * blocks, 0, 0, 0])
    return _uniforms(gen.random_raw(n * blocks * 4).reshape(n, blocks * 4))


def _click_d1(p1, u):
    # sample the rarer outcome so near-certain clicks are never flipped by rounding
    p2 = 1.0 - p1
    return np.where(p1 <= p2, u < p1, ~(u < p2))


def _prepare(train, hidden, noise):
    _require_convention(train)
    if hidden is not None:
        train = train.with_hidden(hidden)
    p1, p2 = click_probabilities(train)
    correct = "D1" if p1 >= p2 else "D2"
    if noise.systematic_offset_deg:
        train = train.with_offsets(noise.systematic_offset_deg)
    return train, correct


def _report(d1, d2, none, trials, seed, correct, hidden_name, sigma):
    clicks = d1 + d2
    good = d1 if correct == "D1" else d2
    success = good / clicks if clicks else None
    return CountReport(
        trials=trials, d1_counts=int(d1), d2_counts=int(d2), no_click=int(none),
        success_prob=success, wilson_ci_95=wilson_interval(good, clicks), seed=int(seed),
        correct_detector=correct, hidden=hidden_name, sigma_deg=float(sigma),
    )


def run_trials(train: OpticalTrain, hidden, noise: NoiseModel, trials: int, seed: int,
               stream: int = 0, hidden_name: str = "", chunk: int = 1 << 15) -> CountReport:
    """Simulate ``trials`` single photons through ``train`` with the unknown box set to ``hidden``.

    ``hidden=None`` keeps whatever plates the hidden slots already hold. The
    correct detector is the one the noise-free train favours.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    train, correct = _prepare(train, hidden, noise)
    plates = train.plates()
    k = len(plates)
    blocks = _blocks_per_trial(k)
    d1 = d2 = none = 0
    for t0 in range(0, trials, chunk):
        n = min(chunk, trials - t0)
        u = trial_uniforms(seed, stream, blocks, t0, n)
        perturb = noise.angle_sigma_deg * ndtri(u[:, :k])
        p1 = click_probabilities_batch(train, perturb)
        detected = u[:, k] < noise.detector_efficiency
        dark = u[:, k + 1] < noise.dark_count_prob
        dark_d1 = u[:, k + 2] < 0.5
        hit_d1 = _click_d1(p1, u[:, k + 3])
        is_d1 = np.where(detected, hit_d1, dark & dark_d1)
        is_d2 = np.where(detected, ~hit_d1, dark & ~dark_d1)
        d1 += int(is_d1.sum())
        d2 += int(is_d2.sum())
        none += int(n - is_d1.sum() - is_d2.sum())
    return _report(d1, d2, none, trials, seed, correct, hidden_name, noise.angle_sigma_deg)


def run_trials_reference(train: OpticalTrain, hidden, noise: NoiseModel, trials: int, seed: int,
                         stream: int = 0, hidden_name: str = "") -> CountReport:
    """Straightforward per-trial loop over the same substreams; the oracle for :func:`run_trials`."""
    train, correct = _prepare(train, hidden, noise)
    plates = train.plates()
    k = len(plates)
    blocks = _blocks_per_trial(k)
    gauss = NormalDist()
    counts = {"D1": 0, "D2": 0, None: 0}
    for t in range(trials):
        gen = np.random.Philox(key=_key(seed, stream), counter=[t * blocks, 0, 0, 0])
        raw = gen.random_raw(blocks * 4)
        u = [((int(r) >> 11) + 0.5) * _U53 for r in raw]
        state = qmat.KET_H.copy()
        for j, p in enumerate(plates):
            angle = p.angle_deg + noise.angle_sigma_deg * gauss.inv_cdf(u[j])
            state = plate_matrix(p.kind, angle, train.convention) @ state
        p1 = abs(state[1]) ** 2 / (abs(state[0]) ** 2 + abs(state[1]) ** 2)
        if u[k] < noise.detector_efficiency:
            hit = (u[k + 3] < p1) if p1 <= 1 - p1 else not (u[k + 3] < 1 - p1)
            outcome = "D1" if hit else "D2"
        elif u[k + 1] < noise.dark_count_prob:
            outcome = "D1" if u[k + 2] < 0.5 else "D2"
        else:
            outcome = None
        counts[outcome] += 1
    return _report(counts["D1"], counts["D2"], counts[None], trials, seed, correct,
                   hidden_name, noise.angle_sigma_deg)


@dataclass(frozen=True)
class SweepPoint:
    sigma_deg: float
    report_u: CountReport
    report_v: CountReport

    @property
    def mean_success(self) -> float:
        return (self.report_u.success_prob + self.report_v.success_prob) / 2

    def to_json(self) -> dict:
        return {"sigma_deg": self.sigma_deg, "mean_success": self.mean_success,
                "u": self.report_u.to_json(), "v": self.report_v.to_json()}


def noise_sweep(train: OpticalTrain, u, v, sigmas, trials: int, seed: int,
                base_noise: NoiseModel | None = None) -> list[SweepPoint]:
    """Success for both hidden choices at each angle sigma (degrees)."""
    sigmas = [float(s) for s in sigmas]
    if sigmas != sorted(sigmas):
        raise ValueError("sigmas must be sorted ascending")
    base = base_noise or NoiseModel()
    out = []
    for s in sigmas:
        noise = NoiseModel(s, base.systematic_offset_deg, base.detector_efficiency, base.dark_count_prob)
        ru = run_trials(train, u, noise, trials, seed, stream=0, hidden_name="U")
        rv = run_trials(train, v, noise, trials, seed, stream=1, hidden_name="V")
        out.append(SweepPoint(s, ru, rv))
    return out


def success_crossing(train: OpticalTrain, u, v, threshold: float = 0.98, trials: int = 20_000,
                     seed: int = 0, lo: float = 0.0, hi: float = 10.0, iters: int = 25) -> float:
    """Smallest sigma (degrees) at which mean success drops below ``threshold``, by bisection.

    The same seed is used at every probe so the Monte Carlo noise is common
    to all sigmas.
    """
    def mean_at(s):
        return noise_sweep(train, u, v, [s], trials, seed)[0].mean_success

    if mean_at(hi) >= threshold:
        raise ValueError(f"success stays above {threshold} up to sigma={hi}")
    for _ in range(iters):
        mid = (lo + hi) / 2
        if mean_at(mid) < threshold:
            hi = mid
        else:
            lo = mid
    return hi


def avg_process_fidelity(ideal, actual) -> float:
    """Average gate fidelity of two qubit unitaries, ``(|Tr(ideal^dagger actual)|^2 + 2) / 6``."""
    a = qmat.require_unitary(qmat.as_mat2(ideal), "ideal")
    b = qmat.require_unitary(qmat.as_mat2(actual), "actual")
    return float((abs(np.trace(a.conj().T @ b)) ** 2 + 2) / 6)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()
