"""Constrained maximum likelihood via a real-coded genetic search with
multi-start pooling, elite aggregation, and dispersion-based uncertainty."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateDataError, DomainError
from .fees import FeeSchedule
from .likelihood import LikelihoodEvaluator
from .model import BETA_NAMES, ModelConfig, ModelParams, PARAM_NAMES

#: Interior offset turning the strict sign constraints into closed intervals.
SIGN_EPS = 1e-6

_SIGN_POSITIVE = ("sigma", "depreciation", "family_size", "inventor_size", "tech_scope")
_SIGN_NEGATIVE = ("grant_lag",)


@dataclass(frozen=True)
class GaConfig:
    """Operator settings for the genetic search.  All operators are exposed."""

    seed: int
    population_size: int = 10_000
    generations: int = 20
    starts: int = 5
    elite_size: int = 200
    tournament_size: int = 4
    #: Per-generation multiplier on the tournament size (capped at 5% of the
    #: population); > 1 raises selection pressure as the search narrows.
    tournament_growth: float = 1.2
    crossover_rate: float = 0.9
    blend_alpha: float = 0.5
    mutation_rate: float = 0.15
    mutation_scale: float = 0.1
    #: Per-generation multiplier on the mutation scale; < 1 moves the search
    #: from exploration to exploitation as generations pass.
    mutation_anneal: float = 0.72
    #: Small Gaussian jitter (as a fraction of box width) added to every child
    #: gene each generation, on top of the annealed mutation.  Prevents the
    #: population from collapsing into exact clones of the incumbent, so the
    #: elite keeps a dispersion at the scale of the near-optimal likelihood
    #: shell and remains usable as an uncertainty measure.
    diffusion_scale: float = 0.004
    elitism_fraction: float = 0.01
    #: Lamarckian intensification: the generation best is walked uphill by
    #: coordinate golden-section, up to this many sweeps per generation or
    #: until a sweep gains less than polish_tol; 0 disables the step.
    polish_sweeps: int = 15
    polish_tol: float = 0.5

    def __post_init__(self):
        problems = []
        for name in ("population_size", "generations", "starts", "elite_size", "tournament_size"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        for name in ("crossover_rate", "mutation_rate", "elitism_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                problems.append(f"{name} must lie in [0, 1]")
        if self.elite_size > self.population_size:
            problems.append("elite_size must not exceed population_size")
        if self.tournament_size > self.population_size:
            problems.append("tournament_size must not exceed population_size")
        if self.mutation_scale < 0 or self.blend_alpha < 0:
            problems.append("mutation_scale and blend_alpha must be >= 0")
        if not 0.0 < self.mutation_anneal <= 1.0:
            problems.append("mutation_anneal must lie in (0, 1]")
        if self.diffusion_scale < 0:
            problems.append("diffusion_scale must be >= 0")
        if self.polish_sweeps < 0:
            problems.append("polish_sweeps must be >= 0")
        if self.polish_tol < 0:
            problems.append("polish_tol must be >= 0")
        if self.tournament_growth < 1.0:
            problems.append("tournament_growth must be >= 1")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @classmethod
    def desk(cls, seed: int, **overrides) -> "GaConfig":
        """Reduced-size settings for interactive runs."""
        overrides.setdefault("population_size", 2_000)
        return cls(seed=seed, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ParamBounds:
    """Closed search box per parameter, in PARAM_NAMES order."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        problems = []
        if lower.shape != (len(PARAM_NAMES),) or upper.shape != (len(PARAM_NAMES),):
            raise ConfigurationError(
                f"bounds must have one (lower, upper) pair per parameter in {PARAM_NAMES}"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            problems.append("bounds must be finite")
        for i, name in enumerate(PARAM_NAMES):
            if lower[i] > upper[i]:
                problems.append(f"{name}: empty interval [{lower[i]}, {upper[i]}]")
        for name in _SIGN_POSITIVE:
            if lower[PARAM_NAMES.index(name)] <= 0:
                problems.append(f"{name}: lower bound must be > 0")
        for name in _SIGN_NEGATIVE:
            if upper[PARAM_NAMES.index(name)] >= 0:
                problems.append(f"{name}: upper bound must be < 0")
        if problems:
            raise ConfigurationError("; ".join(problems))
        lower.setflags(write=False)
        upper.setflags(write=False)

    @classmethod
    def default(
        cls,
        depreciation: tuple[float, float] = (0.1, 0.5),
        sigma_max: float = 20.0,
        beta_max: float = 10.0,
    ) -> "ParamBounds":
        lower = np.empty(len(PARAM_NAMES))
        upper = np.empty(len(PARAM_NAMES))
        for i, name in enumerate(PARAM_NAMES):
            if name == "sigma":
                lower[i], upper[i] = SIGN_EPS, sigma_max
            elif name == "depreciation":
                lower[i], upper[i] = depreciation
            elif name == "grant_lag":
                lower[i], upper[i] = -beta_max, -SIGN_EPS
            elif name in _SIGN_POSITIVE:
                lower[i], upper[i] = SIGN_EPS, beta_max
            else:
                lower[i], upper[i] = -beta_max, beta_max
        return cls(lower=lower, upper=upper)

    @classmethod
    def from_dict(cls, d) -> "ParamBounds":
        """Default box with per-parameter overrides ``{name: [lo, hi]}``."""
        base = cls.default()
        lower = base.lower.copy()
        upper = base.upper.copy()
        unknown = set(d) - set(PARAM_NAMES)
        if unknown:
            raise ConfigurationError(f"bounds name unknown parameters: {sorted(unknown)}")
        for name, pair in d.items():
            i = PARAM_NAMES.index(name)
            lower[i], upper[i] = float(pair[0]), float(pair[1])
        return cls(lower=lower, upper=upper)

    def to_dict(self) -> dict:
        return {
            name: [float(self.lower[i]), float(self.upper[i])]
            for i, name in enumerate(PARAM_NAMES)
        }

    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class EstimationDiagnostics:
    start_best_trajectories: tuple[tuple[float, ...], ...]
    boundary_hits: dict[str, bool]
    pooled_size: int


@dataclass(frozen=True)
class RefinedPoint:
    params: ModelParams
    log_likelihood: float
    sweeps: int


@dataclass(frozen=True)
class EstimationResult:
    point_estimate: ModelParams
    std_errors: dict[str, float]
    best: ModelParams
    best_log_likelihood: float
    elite: list[tuple[ModelParams, float]]
    diagnostics: EstimationDiagnostics
    ga_config: GaConfig
    bounds: ParamBounds
    refined: RefinedPoint | None = None

    def elite_params(self) -> list[ModelParams]:
        return [params for params, _ in self.elite]


def _tournament_pick(rng, fitness, k, count) -> np.ndarray:
    contenders = rng.integers(0, len(fitness), size=(count, k))
    winners = np.argmax(fitness[contenders], axis=1)
    return contenders[np.arange(count), winners]


def _run_start(
    evaluate: Callable[[np.ndarray], np.ndarray],
    evaluate_one: Callable[[np.ndarray], float],
    bounds: ParamBounds,
    ga: GaConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    lower, upper = bounds.lower, bounds.upper
    width = bounds.width()
    pop_size = ga.population_size
    dim = len(PARAM_NAMES)

    pop = rng.uniform(lower, upper, size=(pop_size, dim))
    fitness = evaluate(pop)
    trajectory = [float(fitness.max())]

    n_carry = max(1, int(round(ga.elitism_fraction * pop_size)))
    n_children = pop_size - n_carry
    n_pairs = (n_children + 1) // 2

    for generation in range(ga.generations):
        order = np.argsort(-fitness, kind="stable")
        carried = pop[order[:n_carry]]
        carried_fitness = fitness[order[:n_carry]]

        k = min(
            max(ga.tournament_size, int(ga.tournament_size * ga.tournament_growth**generation)),
            max(ga.tournament_size, pop_size // 20),
        )
        parent_rows = _tournament_pick(rng, fitness, k, 2 * n_pairs)
        pa = pop[parent_rows[:n_pairs]]
        pb = pop[parent_rows[n_pairs:]]

        # blend each gene uniformly on the parent span extended by alpha;
        # draws happen for every pair so the stream layout is data-independent
        gamma = rng.uniform(-ga.blend_alpha, 1.0 + ga.blend_alpha, size=(n_pairs, dim))
        cross = (rng.random(n_pairs) < ga.crossover_rate)[:, None]
        child_a = np.where(cross, gamma * pa + (1.0 - gamma) * pb, pa)
        child_b = np.where(cross, (1.0 - gamma) * pa + gamma * pb, pb)
        children = np.vstack([child_a, child_b])[:n_children]

        mutate = rng.random((n_children, dim)) < ga.mutation_rate
        scale = ga.mutation_scale * ga.mutation_anneal**generation
        noise = rng.standard_normal((n_children, dim)) * (scale * width)
        jitter = rng.standard_normal((n_children, dim)) * (ga.diffusion_scale * width)
        children = np.clip(children + np.where(mutate, noise, 0.0) + jitter, lower, upper)

        pop = np.vstack([carried, children])
        fitness = np.concatenate([carried_fitness, evaluate(children)])

        if ga.polish_sweeps > 0:
            # Lamarckian intensification: walk the incumbent uphill coordinate
            # by coordinate (deterministic, consumes no randomness)
            leader = int(np.argmax(fitness))
            polished, polished_fitness, _ = coordinate_ascent(
                evaluate_one,
                pop[leader],
                lower,
                upper,
                tol=ga.polish_tol,
                max_sweeps=ga.polish_sweeps,
                golden_iters=24,
            )
            if polished_fitness > fitness[leader]:
                pop[leader] = polished
                fitness[leader] = polished_fitness

        trajectory.append(float(fitness.max()))

    return pop, fitness, trajectory


def estimate(
    records: Sequence,
    schedule: FeeSchedule,
    config: ModelConfig,
    ga: GaConfig,
    bounds: ParamBounds | None = None,
) -> EstimationResult:
    """Fit the renewal model by pooled multi-start genetic search.

    Runs ``ga.starts`` independent searches from derived seeds, pools their
    final generations, and aggregates the best ``ga.elite_size`` solutions:
    the componentwise median is the point estimate and the elite's spread is
    the reported dispersion.  Deterministic given seed and configuration.
    """
    bounds = bounds if bounds is not None else ParamBounds.default()
    if len(records) < 50:
        raise DomainError(
            f"need at least 50 records for a meaningful fit, got {len(records)}"
        )
    distinct_ages = {rec.expiry_age for rec in records}
    if len(distinct_ages) < 2:
        raise DegenerateDataError(
            "all records share one expiry age; the noise scale is not identified"
        )

    evaluator = LikelihoodEvaluator(records, schedule, config)

    def evaluate(pop: np.ndarray) -> np.ndarray:
        return np.array([evaluator.log_likelihood_vector(row) for row in pop])

    start_seqs = np.random.SeedSequence(ga.seed).spawn(ga.starts)
    pools: list[np.ndarray] = []
    pool_fitness: list[np.ndarray] = []
    trajectories: list[tuple[float, ...]] = []
    for seq in start_seqs:
        pop, fitness, trajectory = _run_start(
            evaluate, evaluator.log_likelihood_vector, bounds, ga, np.random.default_rng(seq)
        )
        pools.append(pop)
        pool_fitness.append(fitness)
        trajectories.append(tuple(trajectory))

    pooled = np.vstack(pools)
    fitness = np.concatenate(pool_fitness)
    order = np.argsort(-fitness, kind="stable")
    elite_rows = pooled[order[: ga.elite_size]]
    elite_fitness = fitness[order[: ga.elite_size]]

    point = np.median(elite_rows, axis=0)
    if len(elite_rows) > 1:
        spread = elite_rows.std(axis=0, ddof=1)
    else:
        spread = np.zeros(len(PARAM_NAMES))

    width = bounds.width()
    boundary_hits = {}
    for i, name in enumerate(PARAM_NAMES):
        if width[i] == 0:
            boundary_hits[name] = True
        else:
            margin = min(point[i] - bounds.lower[i], bounds.upper[i] - point[i])
            boundary_hits[name] = bool(margin < 0.01 * width[i])

    return EstimationResult(
        point_estimate=ModelParams.from_vector(point),
        std_errors={name: float(spread[i]) for i, name in enumerate(PARAM_NAMES)},
        best=ModelParams.from_vector(pooled[order[0]]),
        best_log_likelihood=float(fitness[order[0]]),
        elite=[
            (ModelParams.from_vector(row), float(ll))
            for row, ll in zip(elite_rows, elite_fitness)
        ],
        diagnostics=EstimationDiagnostics(
            start_best_trajectories=tuple(trajectories),
            boundary_hits=boundary_hits,
            pooled_size=len(pooled),
        ),
        ga_config=ga,
        bounds=bounds,
    )


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max_1d(f: Callable[[float], float], lo: float, hi: float, iters: int = 80):
    """Golden-section maximum of f on [lo, hi] (assumes unimodality there)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a <= 1e-14 * max(1.0, abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def coordinate_ascent(
    f: Callable[[np.ndarray], float],
    x0,
    lower,
    upper,
    tol: float = 1e-6,
    max_sweeps: int = 50,
    golden_iters: int = 80,
) -> tuple[np.ndarray, float, int]:
    """Cyclic coordinate maximization of `f` within a box.

    Each sweep line-searches every coordinate by golden section over its full
    bound interval, keeping a move only if it improves, so the objective
    never decreases.  Stops when a sweep improves by less than `tol`.
    """
    x = np.array(x0, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    fx = f(x)
    sweeps_done = 0
    for _ in range(max_sweeps):
        sweeps_done += 1
        before = fx
        for j in range(len(x)):
            if upper[j] <= lower[j]:
                continue

            def along(value: float, j=j) -> float:
                trial = x.copy()
                trial[j] = value
                return f(trial)

            candidate, f_candidate = _golden_max_1d(
                along, float(lower[j]), float(upper[j]), iters=golden_iters
            )
            if f_candidate > fx:
                x[j] = candidate
                fx = f_candidate
        if fx - before < tol:
            break
    return x, fx, sweeps_done


def profile_refine(
    result: EstimationResult,
    records: Sequence,
    schedule: FeeSchedule,
    config: ModelConfig,
) -> EstimationResult:
    """Polish the incumbent by coordinate-wise golden-section ascent.

    The elite set, medians and dispersions are left untouched; the refined
    incumbent is reported separately.
    """
    evaluator = LikelihoodEvaluator(records, schedule, config)
    x, fx, sweeps = coordinate_ascent(
        evaluator.log_likelihood_vector,
        result.best.as_vector(),
        result.bounds.lower,
        result.bounds.upper,
    )
    refined = RefinedPoint(
        params=ModelParams.from_vector(x), log_likelihood=float(fx), sweeps=sweeps
    )
    return dataclasses.replace(result, refined=refined)


def result_to_dict(result: EstimationResult) -> dict:
    """JSON-ready representation of an estimation result (full config echo)."""
    payload = {
        "point_estimate": result.point_estimate.to_dict(),
        "std_errors": dict(result.std_errors),
        "std_error_kind": "elite dispersion",
        "best": result.best.to_dict(),
        "best_log_likelihood": result.best_log_likelihood,
        "elite": [
            {"params": params.to_dict(), "log_likelihood": ll} for params, ll in result.elite
        ],
        "diagnostics": {
            "start_best_trajectories": [
                list(t) for t in result.diagnostics.start_best_trajectories
            ],
            "boundary_hits": dict(result.diagnostics.boundary_hits),
            "pooled_size": result.diagnostics.pooled_size,
        },
        "ga_config": result.ga_config.to_dict(),
        "bounds": result.bounds.to_dict(),
    }
    if result.refined is not None:
        payload["refined"] = {
            "params": result.refined.params.to_dict(),
            "log_likelihood": result.refined.log_likelihood,
            "sweeps": result.refined.sweeps,
        }
    return payload


def result_from_dict(payload: dict) -> EstimationResult:
    refined = None
    if payload.get("refined"):
        refined = RefinedPoint(
            params=ModelParams.from_dict(payload["refined"]["params"]),
            log_likelihood=float(payload["refined"]["log_likelihood"]),
            sweeps=int(payload["refined"]["sweeps"]),
        )
    diag = payload["diagnostics"]
    return EstimationResult(
        point_estimate=ModelParams.from_dict(payload["point_estimate"]),
        std_errors={k: float(v) for k, v in payload["std_errors"].items()},
        best=ModelParams.from_dict(payload["best"]),
        best_log_likelihood=float(payload["best_log_likelihood"]),
        elite=[
            (ModelParams.from_dict(item["params"]), float(item["log_likelihood"]))
            for item in payload["elite"]
        ],
        diagnostics=EstimationDiagnostics(
            start_best_trajectories=tuple(
                tuple(float(v) for v in t) for t in diag["start_best_trajectories"]
            ),
            boundary_hits={k: bool(v) for k, v in diag["boundary_hits"].items()},
            pooled_size=int(diag["pooled_size"]),
        ),
        ga_config=GaConfig(**payload["ga_config"]),
        bounds=ParamBounds.from_dict(payload["bounds"]),
        refined=refined,
    )
