"""Run configuration shared by the CLI and the benchmark harness."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .regression import DEFAULT_ALPHA

METHODS = ("iim", "mean", "knn", "glr", "loess")


@dataclass
class RunConfig:
    k: int = 10
    ell: int | str = "adaptive"
    step: int | None = None
    alpha: float = DEFAULT_ALPHA
    weight_mode: str = "vote"
    method: str = "iim"
    methods: tuple[str, ...] = METHODS
    seed: int = 0
    missing_rate: float = 0.05
    cluster_size: int = 1
    mask_attribute: int | None = None
    normalize: bool = False
    threads: int | None = None
    missing_markers: tuple[str, ...] = ("NA", "?")
    paths: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.ell != "adaptive":
            if isinstance(self.ell, bool) or int(self.ell) < 1:
                raise ValueError("ell must be a positive integer or 'adaptive'")
            self.ell = int(self.ell)
        if self.step is not None and self.step < 1:
            raise ValueError("step must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.weight_mode not in ("vote", "uniform"):
            raise ValueError("weight mode must be 'vote' or 'uniform'")
        for m in (self.method, *self.methods):
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if not 0 < self.missing_rate <= 1:
            raise ValueError("missing rate must be in (0, 1]")
        if self.cluster_size < 1:
            raise ValueError("cluster size must be >= 1")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        d["missing_markers"] = list(self.missing_markers)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        for key in ("methods", "missing_markers"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def make_imputer(config: RunConfig, method: str | None = None):
    """Unfitted imputer for ``method`` (default ``config.method``)."""
    from .baselines import GLRImputer, KNNMeanImputer, LoessImputer, MeanImputer
    from .estimator import IIMImputer

    method = method or config.method
    if method == "iim":
        return IIMImputer(k=config.k, ell=config.ell, step=config.step, alpha=config.alpha,
                          weight_mode=config.weight_mode, normalize=config.normalize,
                          n_jobs=config.threads)
    if method == "mean":
        return MeanImputer(n_jobs=config.threads)
    if method == "knn":
        return KNNMeanImputer(k=config.k, normalize=config.normalize, n_jobs=config.threads)
    if method == "glr":
        return GLRImputer(alpha=config.alpha, n_jobs=config.threads)
    if method == "loess":
        return LoessImputer(k=config.k, alpha=config.alpha, normalize=config.normalize,
                            n_jobs=config.threads)
    raise ValueError(f"unknown method {method!r}")
