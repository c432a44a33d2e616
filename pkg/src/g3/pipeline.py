"""Train / sample / evaluate glue used by the CLI, the scripts and the tests."""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .config import RunConfig
from .evaluation import MmdConfig, evaluate
from .graph import Graph
from .nn import SurrogateGenerator
from .sampler import (CovariateSpec, SampleConfig, base_avg_degree, dataset_statistics,
                      generate)
from .trainer import TrainReport, train


def fit(graphs: Sequence[Graph], cfg: RunConfig, callback=None):
    """Train on ``graphs``. Returns ``(model, meta, report)``; ``meta`` holds
    everything sampling needs and is stored in the checkpoint header."""
    n_max = max(g.n for g in graphs)
    model, report = train(graphs, cfg.mlp(n_max), cfg.train(), callback=callback)
    meta = {
        "run_config": cfg.to_dict(),
        "laplacian": "combinatorial",
        "stats": dataset_statistics(graphs, cfg.representation, cfg.omega),
        "training": {
            "iterations": report.iterations,
            "final_lr": report.final_lr,
            "final_loss": report.iteration_losses[-1] if report.iteration_losses else None,
        },
    }
    return model, meta, report


def sample_config(meta: dict, n: int, seed: int, cfg: Optional[RunConfig] = None,
                  covariates: Optional[CovariateSpec] = None) -> SampleConfig:
    """Sampling settings from the training metadata, with ``cfg`` supplying the
    sampler knobs (alpha, M, threshold rule, base scale, Bernoulli)."""
    cfg = cfg if cfg is not None else RunConfig(**meta["run_config"])
    stats = meta["stats"]
    trained = meta["run_config"]
    if covariates is not None and trained["representation"] != "covariate_laplacian":
        raise ValueError("conditional sampling needs a model trained on the covariate representation")
    return SampleConfig(
        n=n, M=cfg.M, alpha=cfg.alpha,
        avg_degree=base_avg_degree(stats, cfg.base_scale),
        threshold=stats["threshold"], threshold_rule=cfg.threshold_rule,
        mode=trained["mode"], clip_bounds=tuple(stats["clip_bounds"]), seed=seed,
        bernoulli=cfg.bernoulli, degree_log_mean=stats["degree_log_mean"],
        degree_log_var=stats["degree_log_var"], covariates=covariates,
        train_omega=trained["omega"])


def sample(model: SurrogateGenerator, meta: dict, n: int, count: int, seed: int,
           cfg: Optional[RunConfig] = None,
           covariates: Optional[CovariateSpec] = None) -> list[Graph]:
    return generate(model, sample_config(meta, n, seed, cfg, covariates), count)


def run_cell(train_graphs: Sequence[Graph], test_graphs: Sequence[Graph], cfg: RunConfig,
             count: Optional[int] = None, n: Optional[int] = None,
             mmd_cfg: MmdConfig = MmdConfig()) -> dict:
    """Train, sample ``count`` graphs (default: as many as the test set) and
    evaluate them against ``test_graphs``."""
    model, meta, report = fit(train_graphs, cfg)
    n = n if n is not None else max(g.n for g in train_graphs)
    count = count if count is not None else len(test_graphs)
    gen = sample(model, meta, n, count, cfg.seed, cfg)
    out = evaluate(gen, test_graphs, mmd_cfg)
    out["iterations"] = report.iterations
    return out


def nan_report(statistics=("clustering", "degree", "orbit", "spectrum", "triangles")) -> dict:
    return {**{s: math.nan for s in statistics}, "non_unique_fraction": math.nan}


__all__ = ["fit", "sample", "sample_config", "run_cell", "nan_report", "TrainReport"]
