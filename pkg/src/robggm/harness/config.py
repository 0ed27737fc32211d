"""Experiment configuration: dataclass plus INI / JSON loaders."""

from __future__ import annotations

import configparser
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .._base import ConfigurationError
from ..covmat import COV_METHODS
from ..datagen import GRAPH_KINDS, ContaminationSpec

__all__ = ["ExperimentConfig", "parse_estimator", "load_config", "DEFAULT_GAMMA"]

DEFAULT_GAMMA = 0.3
GRAPH_METHODS = ("glasso", "nodewise")
SELECTIONS = ("cv2", "stars", "roc")


def parse_estimator(tag: str) -> tuple[str, float | None]:
    """``"gamma@0.5"`` -> ``("gamma", 0.5)``; ``"kendall"`` -> ``("kendall", None)``."""
    tag = tag.strip()
    if tag == "clime":
        raise ConfigurationError("CLIME is reserved but not implemented")
    method, _, arg = tag.partition("@")
    if method not in COV_METHODS:
        raise ConfigurationError(f"unknown estimator {tag!r}")
    if method == "gamma":
        try:
            g = float(arg) if arg else DEFAULT_GAMMA
        except ValueError:
            raise ConfigurationError(f"bad gamma value in {tag!r}") from None
        if not g > 0:
            raise ConfigurationError(f"gamma must be positive in {tag!r}")
        return method, g
    if arg:
        raise ConfigurationError(f"estimator {method!r} takes no parameter")
    return method, None


def canonical_tag(tag: str) -> str:
    method, g = parse_estimator(tag)
    return f"gamma@{g:g}" if method == "gamma" else method


@dataclass
class ExperimentConfig:
    """One simulation campaign.

    ``selection`` is ``cv2`` (glasso only), ``stars`` (nodewise only) or
    ``roc``, which records every grid point instead of selecting one.
    """

    graph: str = "chain"
    p: int = 100
    n: int = 200
    eps: float = 0.25
    scenario: str = "asymmetric"
    estimators: tuple = ("gamma@0.3", "gamma@0.5", "kendall", "gauss_rank", "gk_qn")
    graph_method: str = "glasso"
    selection: str = "cv2"
    replicates: int = 100
    seed: int = 0
    lambda_count: int = 10
    lambda_ratio: float = 0.05
    out: str = "results"
    threads: int = 1
    hub_size: int = 20
    rule: str = "or"
    stars_subsamples: int = 10
    stars_cut: float = 0.2
    cv_symmetric: bool = False
    contam_mean: float = 10.0
    contam_sd: float = 1.0
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if isinstance(self.estimators, str):
            self.estimators = [e for e in self.estimators.split(",") if e.strip()]
        self.estimators = tuple(dict.fromkeys(canonical_tag(e) for e in self.estimators))
        self.validate()
        self.scenario = self.contamination().scenario

    def validate(self):
        if self.graph not in GRAPH_KINDS:
            raise ConfigurationError(f"unknown graph kind {self.graph!r}")
        if self.p < 2 or self.n < 3:
            raise ConfigurationError("need p >= 2 and n >= 3")
        if self.graph == "hub" and self.p % self.hub_size:
            raise ConfigurationError(f"hub graph needs p divisible by hub_size={self.hub_size}")
        ContaminationSpec(self.eps, self.scenario, self.contam_mean, self.contam_sd)
        if not self.estimators:
            raise ConfigurationError("estimator list is empty")
        if self.graph_method not in GRAPH_METHODS:
            raise ConfigurationError(f"graph_method must be one of {GRAPH_METHODS}")
        if self.selection not in SELECTIONS:
            raise ConfigurationError(f"selection must be one of {SELECTIONS}")
        if self.selection == "cv2" and self.graph_method != "glasso":
            raise ConfigurationError("cv2 selection needs graph_method=glasso")
        if self.selection == "cv2" and self.n < 20:
            raise ConfigurationError("cv2 selection needs n >= 20")
        if self.selection == "stars" and self.graph_method != "nodewise":
            raise ConfigurationError("stars selection needs graph_method=nodewise")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be at least 1")
        if self.lambda_count < 2 or not 0 < self.lambda_ratio < 1:
            raise ConfigurationError("lambda grid needs count >= 2 and ratio in (0, 1)")
        if self.rule not in ("and", "or"):
            raise ConfigurationError("rule must be 'and' or 'or'")
        if self.threads < 1:
            raise ConfigurationError("threads must be at least 1")

    def contamination(self) -> ContaminationSpec:
        return ContaminationSpec(self.eps, self.scenario, self.contam_mean, self.contam_sd)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("extra")
        d["estimators"] = list(self.estimators)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig) if f.name != "extra"}


def _coerce(name, value):
    default = _FIELDS[name].default
    if name == "estimators":
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return list(value)
    if isinstance(default, bool):
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value).strip()


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    unknown = set(mapping) - set(_FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
    return ExperimentConfig(**{k: _coerce(k, v) for k, v in mapping.items()})


def load_config(path) -> ExperimentConfig:
    """Read an experiment from ``.json`` or INI-style ``key = value`` text.

    INI files may use an ``[experiment]`` section; keys outside it (the
    ``[DEFAULT]`` section or sectionless text) are accepted too. Estimator
    lists are comma-separated.
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        if isinstance(data.get("experiment"), dict):
            data = data["experiment"]
        return config_from_mapping(data)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    parser.read_string(text)
    merged = dict(parser.defaults())
    for section in parser.sections():
        merged.update(parser[section])
    return config_from_mapping(merged)
