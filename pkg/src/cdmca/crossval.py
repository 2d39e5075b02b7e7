"""Hyperparameter selection by repeated random holdout of matching weights.

Each repeat holds out every stored edge independently with probability
holdout_prob, fits on the kept edges scaled by 1/(1-holdout_prob), and
scores the per-component matching error on the held-out edges (normalized
to total weight one). Means over repeats drive the selection rule.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .embedding import embed
from .errors import SingularGError
from .evaluation import normalize_weights, per_pc_error
from .solver import SolverConfig, pencil_from_forms, solve, xtmx_blocks, xtwx
from .weights import WeightGraph

DEFAULT_GAMMA_GRID = (0.0, 0.001, 0.01, 0.1, 1.0)


@dataclass(frozen=True)
class CvConfig:
    holdout_prob: float = 0.1
    repeats: int = 30
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    gamma_w: float = 0.0
    regularizer: str = "alpha-scaled"
    max_pcs: int = 10
    knee_threshold: float = 0.5
    seed: int = 0
    max_redraws: int = 100
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(v) for v in self.gamma_grid))
        if not 0.0 < self.holdout_prob < 1.0:
            raise ValueError(
                f"holdout_prob must lie strictly between 0 and 1, got {self.holdout_prob}"
            )
        if self.repeats < 1:
            raise ValueError(f"repeats must be positive, got {self.repeats}")
        if not self.gamma_grid:
            raise ValueError("gamma_grid must not be empty")
        if self.max_pcs < 1:
            raise ValueError(f"max_pcs must be positive, got {self.max_pcs}")
        if not 0.0 < self.knee_threshold:
            raise ValueError(f"knee_threshold must be positive, got {self.knee_threshold}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be positive, got {self.jobs}")


@dataclass(frozen=True)
class HoldoutSplit:
    train: WeightGraph
    held: WeightGraph
    mask: np.ndarray

    @property
    def n_train(self):
        return self.train.n_entries

    @property
    def n_held(self):
        return self.held.n_entries


def holdout_split(graph, holdout_prob, rng, require_nonempty_held=False, max_redraws=100):
    """Bernoulli split of the stored edges into kept and held-out graphs.

    Draws where every edge lands in the held set (or, when requested, none
    does) are discarded and re-drawn a bounded number of times.
    """
    if graph.n_entries == 0:
        raise ValueError("cannot split an empty weight graph")
    if not 0.0 <= holdout_prob <= 1.0:
        raise ValueError(f"holdout_prob must lie in [0, 1], got {holdout_prob}")
    for _ in range(max_redraws + 1):
        mask = rng.random(graph.n_entries) < holdout_prob
        if mask.all():
            continue
        if require_nonempty_held and not mask.any():
            continue
        return HoldoutSplit(
            train=graph.subset(~mask), held=graph.subset(mask), mask=mask
        )
    raise ValueError(
        f"no usable holdout split after {max_redraws + 1} draws "
        f"(holdout_prob={holdout_prob}, edges={graph.n_entries})"
    )


def _repeat_errors(block_data, graph, config, repeat):
    """One repeat: split, fit once per grid value, score on the held edges.

    Returns (repeat, errors or None); None flags a singular training fit.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(repeat,)))
    split = holdout_split(
        graph,
        config.holdout_prob,
        rng,
        require_nonempty_held=True,
        max_redraws=config.max_redraws,
    )
    train = split.train.scaled(1.0 / (1.0 - config.holdout_prob))
    held = normalize_weights(split.held)
    xmx = xtmx_blocks(block_data, train.degrees())
    xwx_full = xtwx(block_data, train)
    out = np.empty((len(config.gamma_grid), config.max_pcs))
    for gi, gamma in enumerate(config.gamma_grid):
        solver_config = SolverConfig(
            k=config.max_pcs,
            gamma_m=gamma,
            gamma_w=config.gamma_w,
            regularizer=config.regularizer,
        )
        pencil = pencil_from_forms(block_data.layout, xmx, xwx_full, solver_config)
        try:
            solution = solve(pencil, config.max_pcs)
        except SingularGError:
            return repeat, None
        emb = embed(block_data, solution.a)
        out[gi] = per_pc_error(emb, held).per_pc
    return repeat, out


@dataclass(frozen=True)
class CvReport:
    """Held-out error summaries per grid value, the raw per-repeat errors,
    and the selection made by the default rule.
    """

    config: CvConfig
    gamma_grid: tuple
    mean_error: np.ndarray
    se_error: np.ndarray
    raw_error: np.ndarray
    failed_repeats: tuple
    selected_k: int
    selected_gamma_m: float
    selection_note: str

    @property
    def n_success(self):
        return self.config.repeats - len(self.failed_repeats)


def cv_error(block_data, graph, config):
    """Run the full holdout procedure and summarize.

    Repeats whose training fit is singular at any grid value are dropped
    with a warning; fewer than half surviving is an error.
    """
    if config.max_pcs > block_data.layout.total_features:
        raise ValueError(
            f"max_pcs={config.max_pcs} exceeds the stacked feature count "
            f"{block_data.layout.total_features}"
        )
    n_gamma = len(config.gamma_grid)
    raw = np.full((n_gamma, config.repeats, config.max_pcs), np.nan)
    failed = []
    if config.jobs == 1:
        results = (
            _repeat_errors(block_data, graph, config, r) for r in range(config.repeats)
        )
        for repeat, errors in results:
            if errors is None:
                failed.append(repeat)
            else:
                raw[:, repeat, :] = errors
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [
                pool.submit(_repeat_errors, block_data, graph, config, r)
                for r in range(config.repeats)
            ]
            for future in futures:
                repeat, errors = future.result()
                if errors is None:
                    failed.append(repeat)
                else:
                    raw[:, repeat, :] = errors
    if failed:
        warnings.warn(
            f"{len(failed)} of {config.repeats} repeats dropped due to singular "
            "training fits; increase gamma_m or the grid",
            stacklevel=2,
        )
    n_success = config.repeats - len(failed)
    if n_success < config.repeats / 2.0:
        raise ValueError(
            f"only {n_success} of {config.repeats} holdout repeats succeeded; "
            "the weight graph is too sparse for this grid (try larger gamma_m)"
        )
    ok = np.setdiff1d(np.arange(config.repeats), np.asarray(failed, dtype=int))
    kept = raw[:, ok, :]
    mean = kept.mean(axis=1)
    if ok.size > 1:
        se = kept.std(axis=1, ddof=1) / np.sqrt(ok.size)
    else:
        se = np.zeros_like(mean)
    selected_k, selected_gamma, note = _select(
        config.gamma_grid, mean, config.knee_threshold
    )
    return CvReport(
        config=config,
        gamma_grid=config.gamma_grid,
        mean_error=mean,
        se_error=se,
        raw_error=raw,
        failed_repeats=tuple(failed),
        selected_k=selected_k,
        selected_gamma_m=selected_gamma,
        selection_note=note,
    )


def _select(gamma_grid, mean_error, knee_threshold):
    """Knee rule on the per-component envelope (best over the grid).

    Components are accepted from the first while their envelope error stays
    at or below knee_threshold times the median envelope error; K is the
    accepted count and gamma minimizes the summed error over the accepted
    components. No accepted component means no recovered structure: K=1 and
    gamma picked by the first component alone.
    """
    envelope = mean_error.min(axis=0)
    cutoff = knee_threshold * float(np.median(envelope))
    below = envelope <= cutoff
    k_star = int(np.argmin(below)) if not below.all() else below.size
    if k_star == 0:
        gamma = gamma_grid[int(np.argmin(mean_error[:, 0]))]
        note = (
            "no component passed the knee rule "
            f"(threshold {knee_threshold} x median); defaulting to k=1"
        )
        warnings.warn(note, stacklevel=3)
        return 1, gamma, note
    sums = mean_error[:, :k_star].sum(axis=1)
    gamma = gamma_grid[int(np.argmin(sums))]
    return k_star, gamma, f"knee rule, threshold {knee_threshold} x median"


def select_hyperparams(report, knee_threshold=None):
    """Re-run the selection rule on an existing report, optionally with a
    different knee threshold. Returns (k, gamma_m).
    """
    if knee_threshold is None:
        knee_threshold = report.config.knee_threshold
    k, gamma, _ = _select(report.gamma_grid, report.mean_error, knee_threshold)
    return k, gamma
