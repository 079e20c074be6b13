"""Seeded data generation and Monte-Carlo studies.

Randomness: every experiment takes one integer seed.  A
``numpy.random.SeedSequence`` built from it is spawned into one child per
replicate, and each child drives its own ``PCG64`` generator; normals come
from ``Generator.standard_normal`` (numpy's ziggurat sampler).  Replicates
are therefore independent of one another and of the number of worker
threads, and results are collected in replicate order.

Every FLSA fit inside an experiment is checked with :func:`verify_kkt`; a
single failure aborts the run with :class:`CertificateError`.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Callable

import numpy as np
from scipy import stats

from .core import Segmentation, Signal, StepModel, as_signal, eps_sign_consistent
from .errors import CertificateError, ConfigError
from .solver import dual_variables, lambda_max, solve, verify_kkt

__all__ = [
    "LambdaRule",
    "ExperimentConfig",
    "ReplicateRecord",
    "McReport",
    "FluctuationResult",
    "CrossingResult",
    "generate",
    "example1_truth",
    "example2_truth",
    "lambda_grid",
    "run_example1",
    "run_example2",
    "run_consistency_sweep",
    "alternating_config",
    "run_experiment",
    "fluctuation_uniformity",
    "crossing_probability_check",
    "monotone_with_one_inversion",
    "wilson_interval",
    "load_config",
    "config_from_dict",
]

KKT_TOL = 1e-8
HUG_BAND = 1e-3


# -- data generation ------------------------------------------------------------

def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def generate(truth: StepModel, seed) -> Signal:
    """``y = mean + noise_sd * N(0, 1)``, deterministic in ``seed``."""
    mean = truth.mean()
    if truth.noise_sd == 0.0:
        return as_signal(mean)
    rng = _generator(seed)
    return as_signal(mean + truth.noise_sd * rng.standard_normal(truth.n))


def example1_truth(noise_sd: float = 1.0) -> StepModel:
    """Levels 1, 2, 1 on 1000 / 1000 / 2000 samples."""
    return StepModel.from_lengths([1000, 1000, 2000], [1.0, 2.0, 1.0], noise_sd)


def example2_truth(noise_sd: float = 1.0) -> StepModel:
    """Staircase: levels 1, 2, 3 on 1000 / 1000 / 2000 samples."""
    return StepModel.from_lengths([1000, 1000, 2000], [1.0, 2.0, 3.0], noise_sd)


def lambda_grid(lam_max: float, size: int = 50, lo: float = 1e-3) -> np.ndarray:
    """``size`` geometric points strictly inside ``(lo * lam_max, lam_max)``."""
    return lam_max * np.geomspace(lo, 1.0, size + 2)[1:-1]


# -- configuration ----------------------------------------------------------------

@dataclass(frozen=True)
class LambdaRule:
    """How lambda is chosen for a replicate.

    kind ``fixed``: ``value``; ``fraction``: ``value * lambda_max(y)``;
    ``power``: ``m5 * n ** c1``.
    """

    kind: str = "fraction"
    value: float = 1.0 / 3.0
    c1: float = 0.75
    m5: float | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "fraction", "power"):
            raise ConfigError(f"unknown lambda rule {self.kind!r}")
        if self.kind == "power" and not 0.5 < self.c1 < 1.0:
            raise ConfigError(f"power rule needs 1/2 < c1 < 1, got {self.c1}")
        if self.kind != "power" and not self.value >= 0:
            raise ConfigError("lambda rule value must be >= 0")

    def lam(self, y: Signal, n: int) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "fraction":
            return float(self.value) * lambda_max(y)
        if self.m5 is None:
            raise ConfigError("power rule has no m5; resolve it first")
        return float(self.m5) * n ** self.c1


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of a Monte-Carlo study.

    ``truth`` is a template; for other sample sizes its change points are
    rescaled proportionally (see :meth:`truth_at`).  ``m1`` .. ``m4`` are the
    regularity constants checked by the consistency sweep: at most ``m1``
    change points, segments of at least ``m2 * n`` samples and absolute jumps
    in ``[m3, m4]``.
    """

    truth: StepModel
    n_values: tuple[int, ...] = ()
    lambda_rule: LambdaRule = field(default_factory=LambdaRule)
    eps: float = 0.02
    reps: int = 200
    seed: int = 0
    grid_size: int = 50
    m1: int = 5
    m2: float = 0.1
    m3: float = 0.5
    m4: float = 2.0
    m5_reference_n: int = 1000
    experiment: str = "single"

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.eps >= 0:
            raise ConfigError("eps must be >= 0")
        if any(int(n) < 2 for n in self.n_values):
            raise ConfigError("every n must be >= 2")
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))

    def truth_at(self, n: int) -> StepModel:
        t = self.truth
        if n == t.n:
            return t
        cps = np.rint(t.change_points * (n / t.n)).astype(np.int64)
        return StepModel(n, cps, t.levels, t.noise_sd)

    def to_dict(self) -> dict:
        t = self.truth
        b = np.concatenate(([0], t.change_points, [t.n]))
        return {
            "experiment": self.experiment,
            "truth": {
                "lengths": np.diff(b).tolist(),
                "levels": t.levels.tolist(),
                "noise_sd": t.noise_sd,
            },
            "n_values": list(self.n_values),
            "lambda_rule": asdict(self.lambda_rule),
            "eps": self.eps,
            "reps": self.reps,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "m1": self.m1,
            "m2": self.m2,
            "m3": self.m3,
            "m4": self.m4,
            "m5_reference_n": self.m5_reference_n,
        }


def _schema(name: str) -> dict:
    return json.loads(resources.files("fusedlasso").joinpath("schemas", name).read_text())


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a config mapping against ``experiment_config.schema.json``."""
    import jsonschema

    try:
        jsonschema.validate(doc, _schema("experiment_config.schema.json"))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    tr = doc.get("truth")
    kind = doc["experiment"]
    if kind in ("example1", "example2", "fluctuation", "crossing") and tr is None:
        truth = example2_truth() if kind == "example2" else example1_truth()
    elif tr is None:
        truth = alternating_config().truth
    else:
        try:
            truth = StepModel.from_lengths(tr["lengths"], tr["levels"], tr.get("noise_sd", 1.0))
        except ValueError as exc:
            raise ConfigError(f"invalid truth: {exc}") from None
    default_rule = {"kind": "power"} if kind == "sweep" else {}
    rule = LambdaRule(**doc.get("lambda_rule", default_rule))
    keys = ("eps", "reps", "seed", "grid_size", "m1", "m2", "m3", "m4", "m5_reference_n")
    extra = {k: doc[k] for k in keys if k in doc}
    default_n = (250, 500, 1000, 2000, 4000) if kind == "sweep" else ()
    return ExperimentConfig(truth=truth, n_values=tuple(doc.get("n_values", default_n)),
                            lambda_rule=rule, experiment=kind, **extra)


def load_config(path) -> ExperimentConfig:
    """Read a JSON experiment config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(doc)


# -- reports ----------------------------------------------------------------------

@dataclass(frozen=True)
class ReplicateRecord:
    """One replicate; list fields have one entry per evaluated lambda."""

    index: int
    n: int
    lam: list[float]
    consistent: list[bool]
    n_change_points: list[int]
    spurious: list[int]
    change_points: list[int]  # at the reference lambda (first entry of ``lam`` unless noted)


@dataclass
class McReport:
    experiment: str
    config: dict
    records: list[ReplicateRecord]
    failure_frequency: dict[str, float]
    mean_spurious: dict[str, float]
    extras: dict[str, Any] = field(default_factory=dict)
    runtime_s: float = 0.0

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = {
            "schema_version": 1,
            "experiment": self.experiment,
            "config": self.config,
            "records": [asdict(r) for r in self.records],
            "failure_frequency": self.failure_frequency,
            "mean_spurious": self.mean_spurious,
            "extras": self.extras,
        }
        if include_runtime:
            out["runtime_s"] = self.runtime_s
        return out

    @property
    def success_frequency(self) -> float:
        """Overall success rate (any evaluated lambda consistent)."""
        ok = sum(any(r.consistent) for r in self.records)
        return ok / len(self.records)


# -- helpers ------------------------------------------------------------------------

def _certified_solve(y: Signal, lam: float, where: str) -> Segmentation:
    seg = solve(y, lam)
    report = verify_kkt(y, seg, lam, KKT_TOL)
    if not report.feasible:
        raise CertificateError(f"certificate failed in {where} at lambda={lam!r}", report)
    return seg


def _spurious(seg: Segmentation, truth: StepModel, eps: float) -> int:
    if seg.change_points.size == 0:
        return 0
    if truth.change_points.size == 0:
        return int(seg.change_points.size)
    d = np.abs(seg.change_points[:, None] - truth.change_points[None, :]).min(axis=1)
    return int(np.count_nonzero(d >= eps * truth.n))


def _map(fn: Callable[[int], Any], count: int, threads: int | None) -> list:
    if threads is None or threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _hug_fraction(y: Signal, seg: Segmentation, lo: int, hi: int) -> float:
    """Share of dual entries strictly inside ``(lo, hi)`` within ``HUG_BAND*lam`` of +lam."""
    lam = seg.lam
    z = dual_variables(y, seg).z[lo + 1:hi]
    if z.size == 0 or lam == 0:
        return 0.0
    return float(np.mean(np.abs(z - lam) <= HUG_BAND * lam))


def _replicate_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(count)


# -- Example 1 and 2 ----------------------------------------------------------------

def run_example1(reps: int = 200, seed: int = 0, eps: float = 0.02, noise_sd: float = 1.0,
                 fraction: float = 1.0 / 3.0, threads: int | None = None) -> McReport:
    """Levels 1, 2, 1 at ``lambda = fraction * lambda_max``; score at ``eps``."""
    truth = example1_truth(noise_sd)
    cfg = ExperimentConfig(truth, (truth.n,), LambdaRule("fraction", fraction), eps, reps,
                           seed, experiment="example1")
    seeds = _replicate_seeds(seed, reps)
    lo, hi = (int(p) for p in truth.change_points[:2])

    def one(i: int):
        y = generate(truth, seeds[i])
        lam = cfg.lambda_rule.lam(y, truth.n)
        seg = _certified_solve(y, lam, f"example1 replicate {i}")
        rec = ReplicateRecord(i, truth.n, [lam], [eps_sign_consistent(seg, truth, eps)],
                              [int(seg.change_points.size)], [_spurious(seg, truth, eps)],
                              seg.change_points.tolist())
        return rec, _hug_fraction(y, seg, lo, hi)

    t0 = time.perf_counter()
    out = _map(one, reps, threads)
    records = [r for r, _ in out]
    key = str(truth.n)
    report = McReport(
        "example1", cfg.to_dict(), records,
        {key: 1.0 - sum(r.consistent[0] for r in records) / reps},
        {key: float(np.mean([r.spurious[0] for r in records]))},
        {"middle_hug_fraction": float(np.mean([h for _, h in out]))},
    )
    report.runtime_s = time.perf_counter() - t0
    return report


def run_example2(reps: int = 200, seed: int = 0, eps: float = 0.01, noise_sd: float = 1.0,
                 grid_size: int = 50, hug_fraction: float = 1.0 / 3.0,
                 threads: int | None = None) -> McReport:
    """Staircase 1, 2, 3 scored on a geometric lambda grid.

    ``failure_frequency`` maps each grid index to the share of replicates
    that are not eps-sign-consistent there; ``extras["any_lambda_failure"]``
    is the share with no consistent grid point at all.  The dual's hugging of
    +lambda in the middle segment is measured at ``hug_fraction * lambda_max``.
    """
    truth = example2_truth(noise_sd)
    cfg = ExperimentConfig(truth, (truth.n,), LambdaRule("fraction", hug_fraction), eps, reps,
                           seed, grid_size=grid_size, experiment="example2")
    seeds = _replicate_seeds(seed, reps)
    lo, hi = (int(p) for p in truth.change_points[:2])
    c = truth.min_segment_fraction()

    def one(i: int):
        y = generate(truth, seeds[i])
        grid = lambda_grid(lambda_max(y), grid_size)
        ok, ncp, spur = [], [], []
        for j, lam in enumerate(grid):
            seg = _certified_solve(y, float(lam), f"example2 replicate {i} grid {j}")
            ok.append(eps_sign_consistent(seg, truth, eps))
            ncp.append(int(seg.change_points.size))
            spur.append(_spurious(seg, truth, eps))
        ref = _certified_solve(y, cfg.lambda_rule.lam(y, truth.n), f"example2 replicate {i}")
        rec = ReplicateRecord(i, truth.n, [float(g) for g in grid], ok, ncp, spur,
                              ref.change_points.tolist())
        return rec, _hug_fraction(y, ref, lo, hi)

    t0 = time.perf_counter()
    out = _map(one, reps, threads)
    records = [r for r, _ in out]
    fail = {str(j): 1.0 - sum(r.consistent[j] for r in records) / reps for j in range(grid_size)}
    spur = {str(j): float(np.mean([r.spurious[j] for r in records])) for j in range(grid_size)}
    bound = 1.0 - math.pi**2 * eps / (c - eps) if c > eps else None
    middle = slice(lo, hi)
    report = McReport(
        "example2", cfg.to_dict(), records, fail, spur,
        {
            "any_lambda_failure": 1.0 - sum(any(r.consistent) for r in records) / reps,
            "min_grid_failure": min(fail.values()),
            "middle_hug_fraction": float(np.mean([h for _, h in out])),
            "middle_spurious_mean": float(np.mean([
                sum(1 for p in r.change_points if middle.start + eps * truth.n <= p
                    < middle.stop - eps * truth.n)
                for r in records
            ])),
            "min_segment_fraction": c,
            "asymptotic_failure_bound": bound,
        },
    )
    report.runtime_s = time.perf_counter() - t0
    return report


# -- consistency sweep --------------------------------------------------------------

def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def monotone_with_one_inversion(counts: list[int], reps: int) -> bool:
    """Non-increasing frequencies, allowing one rise whose 95% intervals overlap."""
    rises = [i for i in range(len(counts) - 1) if counts[i + 1] > counts[i]]
    if len(rises) > 1:
        return False
    for i in rises:
        lo_a, hi_a = wilson_interval(counts[i], reps)
        lo_b, hi_b = wilson_interval(counts[i + 1], reps)
        if hi_a < lo_b or hi_b < lo_a:
            return False
    return True


def _check_regular(cfg: ExperimentConfig, truth: StepModel) -> None:
    if truth.has_staircase():
        raise ConfigError(
            "consecutive jumps share a sign (staircase); the consistency sweep needs "
            "alternating signs, use run_example2 for staircase truths"
        )
    k = truth.change_points.size
    if k > cfg.m1:
        raise ConfigError(f"{k} change points exceed m1={cfg.m1}")
    if truth.min_segment_fraction() < cfg.m2:
        raise ConfigError(f"shortest segment is below m2={cfg.m2} of the sample")
    jumps = np.abs(np.diff(truth.levels))
    if jumps.size and (jumps.min() < cfg.m3 or jumps.max() > cfg.m4):
        raise ConfigError(f"jump sizes must lie in [{cfg.m3}, {cfg.m4}]")


def _resolve_m5(cfg: ExperimentConfig) -> LambdaRule:
    rule = cfg.lambda_rule
    if rule.kind != "power" or rule.m5 is not None:
        return rule
    ref = cfg.truth_at(cfg.m5_reference_n)
    m5 = lambda_max(ref.mean()) / 3.0 / cfg.m5_reference_n ** rule.c1
    return LambdaRule("power", rule.value, rule.c1, m5)


def alternating_config(n_values=(250, 500, 1000, 2000, 4000), reps: int = 200,
                       seed: int = 0, eps: float = 0.02, c1: float = 0.75) -> ExperimentConfig:
    """Levels 1, 2, 1, 2 on equal quarters with the power rule for lambda."""
    truth = StepModel.from_lengths([250] * 4, [1.0, 2.0, 1.0, 2.0], 1.0)
    return ExperimentConfig(truth, tuple(n_values), LambdaRule("power", c1=c1), eps, reps,
                            seed, experiment="sweep")


def run_consistency_sweep(cfg: ExperimentConfig, threads: int | None = None,
                          rate_bound: float = 10.0) -> McReport:
    """Failure frequency of eps-sign-consistency as n grows.

    Extras: ``monotone`` (non-increasing up to one overlapping inversion),
    ``rate`` (``-log P / n^(2 c1 - 1)`` per n, with ``P = (0.5)/(reps + 1)``
    when no failure was seen) and ``rate_bounded`` (all rates finite and at
    most ``rate_bound``).
    """
    if not cfg.n_values:
        raise ConfigError("n_values must be non-empty")
    if list(cfg.n_values) != sorted(set(cfg.n_values)):
        raise ConfigError("n_values must be strictly increasing")
    for n in cfg.n_values:
        _check_regular(cfg, cfg.truth_at(n))
    rule = _resolve_m5(cfg)
    if rule.kind != "power":
        c1 = 0.75
    else:
        c1 = rule.c1
    t0 = time.perf_counter()
    children = _replicate_seeds(cfg.seed, len(cfg.n_values))
    records: list[ReplicateRecord] = []
    fail: dict[str, float] = {}
    spur: dict[str, float] = {}
    counts: list[int] = []
    for n, child in zip(cfg.n_values, children):
        truth = cfg.truth_at(n)
        seeds = child.spawn(cfg.reps)

        def one(i: int, truth=truth, seeds=seeds, n=n):
            y = generate(truth, seeds[i])
            lam = rule.lam(y, n)
            seg = _certified_solve(y, lam, f"sweep n={n} replicate {i}")
            return ReplicateRecord(i, n, [lam], [eps_sign_consistent(seg, truth, cfg.eps)],
                                   [int(seg.change_points.size)],
                                   [_spurious(seg, truth, cfg.eps)], seg.change_points.tolist())

        recs = _map(one, cfg.reps, threads)
        records.extend(recs)
        k = sum(not r.consistent[0] for r in recs)
        counts.append(k)
        fail[str(n)] = k / cfg.reps
        spur[str(n)] = float(np.mean([r.spurious[0] for r in recs]))
    rate = {}
    for n, k in zip(cfg.n_values, counts):
        p = k / cfg.reps if k > 0 else 0.5 / (cfg.reps + 1)
        rate[str(n)] = -math.log(p) / n ** (2 * c1 - 1)
    conf = cfg.to_dict()
    conf["lambda_rule"] = asdict(rule)
    report = McReport(
        "sweep", conf, records, fail, spur,
        {
            "failure_counts": counts,
            "monotone": monotone_with_one_inversion(counts, cfg.reps),
            "rate": rate,
            "rate_bounded": all(math.isfinite(r) and r <= rate_bound for r in rate.values()),
        },
    )
    report.runtime_s = time.perf_counter() - t0
    return report


# -- fluctuation checks ---------------------------------------------------------------

@dataclass(frozen=True)
class FluctuationResult:
    n: int
    reps: int
    frequencies: list[float]
    chi2: float
    p_value: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def fluctuation_uniformity(n: int, reps: int, seed: int, alpha: float = 0.01,
                           chunk: int = 100_000) -> FluctuationResult:
    """Number of positive bridge sums ``u_k = S_k - (k/n) S_n``, ``k < n``.

    For exchangeable continuous increments the count is uniform on
    ``{0, ..., n-1}``; tested with a chi-square goodness-of-fit test.
    """
    if n < 2:
        raise ConfigError("n must be >= 2")
    if reps < 10_000:
        raise ConfigError("reps must be >= 10000")
    rng = _generator(seed)
    counts = np.zeros(n, dtype=np.int64)
    k = np.arange(1, n) / n
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        x = rng.standard_normal((m, n))
        s = np.cumsum(x, axis=1)
        u = s[:, :-1] - k * s[:, -1:]
        counts += np.bincount(np.count_nonzero(u > 0, axis=1), minlength=n)
        done += m
    res = stats.chisquare(counts)
    return FluctuationResult(n, reps, (counts / reps).tolist(), float(res.statistic),
                             float(res.pvalue), alpha)


@dataclass(frozen=True)
class CrossingResult:
    n: int
    eps: float
    reps: int
    estimate: float
    standard_error: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.estimate >= self.bound - 3.0 * self.standard_error

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def crossing_probability_check(n: int, eps: float, reps: int, seed: int,
                               delta: float = 1.0, chunk: int = 200_000) -> CrossingResult:
    """Probability that the bridge ``S_t - (t/n) S_n`` is >= 0 on both flanks.

    The flanks are ``t = 1 .. L`` and ``t = n - L .. n - 1`` with
    ``L = round(eps * n)``.  Only the ``2L`` flank increments and the sum of
    the middle ``n - 2L`` increments matter, so each replicate draws
    ``2L + 1`` normals.  Compared with ``1 / ((1 + delta) pi^2 eps n)``.
    """
    width = int(round(eps * n))
    if width < 2:
        raise ConfigError(f"eps * n = {eps * n:g} must be at least 2")
    if 2 * width > n:
        raise ConfigError("flanks overlap: need 2 * eps * n <= n")
    bound = 1.0 / ((1.0 + delta) * math.pi**2 * eps * n)
    if bound * reps < 50:
        raise ConfigError(
            f"reps={reps} too small to resolve the bound {bound:.3g} (need bound*reps >= 50)"
        )
    rng = _generator(seed)
    hits = 0
    done = 0
    t_left = np.arange(1, width + 1)
    t_right = np.arange(n - width, n)
    while done < reps:
        m = min(chunk, reps - done)
        left = rng.standard_normal((m, width))
        mid = math.sqrt(n - 2 * width) * rng.standard_normal(m)
        right = rng.standard_normal((m, width))
        s_left = np.cumsum(left, axis=1)
        total = s_left[:, -1] + mid + right.sum(axis=1)
        # S_t for t = n - L .. n - 1 is total minus the trailing increments
        tail = np.cumsum(right[:, ::-1], axis=1)[:, ::-1]  # tail[:, j] = sum right[j:]
        s_right = total[:, None] - tail
        ok_l = np.all(s_left - (t_left / n) * total[:, None] >= 0, axis=1)
        ok_r = np.all(s_right - (t_right / n) * total[:, None] >= 0, axis=1)
        hits += int(np.count_nonzero(ok_l & ok_r))
        done += m
    p = hits / reps
    se = math.sqrt(p * (1 - p) / reps)
    return CrossingResult(n, eps, reps, p, se, bound)


# -- config dispatch --------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> dict:
    """Run the study named by ``cfg.experiment`` and return its JSON-ready report."""
    kind = cfg.experiment
    if kind == "example1":
        frac = cfg.lambda_rule.value if cfg.lambda_rule.kind == "fraction" else 1.0 / 3.0
        return run_example1(cfg.reps, cfg.seed, cfg.eps, cfg.truth.noise_sd, frac,
                            threads).to_dict()
    if kind == "example2":
        return run_example2(cfg.reps, cfg.seed, cfg.eps, cfg.truth.noise_sd, cfg.grid_size,
                            threads=threads).to_dict()
    if kind == "sweep":
        return run_consistency_sweep(cfg, threads).to_dict()
    if kind == "fluctuation":
        n = cfg.n_values[0] if cfg.n_values else 5
        return {"schema_version": 1, "experiment": kind,
                **fluctuation_uniformity(n, cfg.reps, cfg.seed).to_dict()}
    if kind == "crossing":
        n = cfg.n_values[0] if cfg.n_values else 500
        return {"schema_version": 1, "experiment": kind,
                **crossing_probability_check(n, cfg.eps, cfg.reps, cfg.seed).to_dict()}
    raise ConfigError(f"unknown experiment {kind!r}")
