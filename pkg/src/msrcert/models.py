"""Pydantic models for manifests, run configuration and report records."""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from .config import config


class Norm(str, Enum):
    """Distance used for perturbation balls and word distances."""
    L2 = "l2"
    LINF = "linf"


class LayerKind(str, Enum):
    DENSE = "Dense"
    CONV2D = "Conv2D"
    RELU = "ReLU"
    SIGMOID = "Sigmoid"
    TANH = "Tanh"
    FLATTEN = "Flatten"
    LSTM = "LSTM"


ACTIVATION_KINDS = (LayerKind.RELU, LayerKind.SIGMOID, LayerKind.TANH)


# ============================================================================
# Weight manifest
# ============================================================================


class LayerManifest(BaseModel):
    """One layer of a weight manifest: kind, shape parameters and flat row-major weights."""
    kind: LayerKind
    params: Dict[str, Any] = Field(default_factory=dict)
    weights: Dict[str, List[float]] = Field(default_factory=dict)

    @field_validator("weights")
    @classmethod
    def validate_finite(cls, v: Dict[str, List[float]]) -> Dict[str, List[float]]:
        for name, values in v.items():
            if not all(math.isfinite(x) for x in values):
                raise ValueError(f"weight tensor '{name}' contains a non-finite value")
        return v


class ModelManifest(BaseModel):
    """A single JSON document describing a network."""
    input_shape: Tuple[int, int]
    num_classes: int = Field(..., ge=1)
    layers: List[LayerManifest] = Field(..., min_length=1)

    @field_validator("input_shape")
    @classmethod
    def validate_input_shape(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 1 or v[1] < 1:
            raise ValueError("input_shape entries must be positive")
        return v


# ============================================================================
# Synthetic fixture task
# ============================================================================


class FixtureConfig(BaseModel):
    """Synthetic polarity task used to train desk-scale test models."""
    polarity_words: int = Field(default=10, ge=1)
    length: int = Field(default=5, ge=1)
    dim: int = Field(default=5, ge=1)
    num_texts: int = Field(default=200, ge=2)
    architecture: Literal["dense", "mlp", "cnn"] = "dense"
    hidden_units: int = Field(default=8, ge=1)
    filters: int = Field(default=4, ge=1)
    kernel_size: Tuple[int, int] = (3, 3)
    signal_dims: int = Field(default=2, ge=1)
    minimal_majority: bool = True
    label_noise: float = Field(default=0.0, ge=0.0, le=0.5)
    learning_rate: float = Field(default=0.05, gt=0.0)
    iterations: int = Field(default=400, ge=1)
    target_accuracy: float = Field(default=0.9, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def validate_shapes(self) -> "FixtureConfig":
        if self.architecture == "cnn":
            kh, kw = self.kernel_size
            if kh < 1 or kw < 1 or kh > self.length or kw > self.dim:
                raise ValueError("kernel_size must be positive and fit inside (length, dim)")
        return self


# ============================================================================
# Run configuration
# ============================================================================


Command = Literal["certify", "attack", "saliency", "gen-fixtures", "report"]

_REQUIRED_FILES: Dict[str, Tuple[str, ...]] = {
    "certify": ("embedding", "model", "texts"),
    "attack": ("embedding", "model", "texts"),
    "saliency": ("embedding", "model", "texts"),
    "gen-fixtures": (),
    "report": ("input",),
}


class RunConfig(BaseModel):
    """Validated parameters of one CLI run."""
    command: Command
    embedding: Optional[Path] = None
    model: Optional[Path] = None
    texts: Optional[Path] = None
    lexicon: Optional[Path] = None
    input: Optional[Path] = None
    output: Optional[Path] = None
    norm: Norm = Norm.L2
    indices: Optional[List[int]] = None
    each_word: bool = False
    tol: float = Field(default_factory=lambda: config.tol, gt=0.0)
    sims: int = Field(default_factory=lambda: config.sims, ge=1)
    alpha: float = Field(default_factory=lambda: config.alpha, ge=0.0)
    neighbor_limit: int = Field(default_factory=lambda: config.neighbor_limit, ge=2)
    budget_fraction: float = Field(default_factory=lambda: config.budget_fraction, gt=0.0, le=1.0)
    max_iterations: int = Field(default_factory=lambda: config.max_iterations, ge=1)
    depth: int = Field(default_factory=lambda: config.depth, ge=1)
    sampling: Literal["pickup", "uniform"] = "pickup"
    seed: int = Field(default_factory=lambda: config.seed, ge=0)
    format: Literal["json", "csv"] = "json"
    fixture: FixtureConfig = Field(default_factory=FixtureConfig)

    @field_validator("indices")
    @classmethod
    def validate_indices(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is None:
            return v
        if not v:
            raise ValueError("indices must not be empty")
        if any(i < 0 for i in v):
            raise ValueError("indices are 0-based and must be non-negative")
        if len(set(v)) != len(v):
            raise ValueError("indices must be distinct")
        return sorted(v)

    @model_validator(mode="after")
    def validate_inputs(self) -> "RunConfig":
        if self.indices is not None and self.each_word:
            raise ValueError("Cannot specify both 'indices' and 'each_word'")
        for name in _REQUIRED_FILES[self.command]:
            path = getattr(self, name)
            if path is None:
                raise ValueError(f"'{self.command}' requires --{name}")
            if not Path(path).is_file():
                raise ValueError(f"{name} file does not exist: {path}")
        if self.lexicon is not None and not Path(self.lexicon).is_file():
            raise ValueError(f"lexicon file does not exist: {self.lexicon}")
        if self.command == "gen-fixtures" and self.output is None:
            raise ValueError("'gen-fixtures' requires --out (a directory)")
        return self

    def attack_settings(self) -> "AttackSettings":
        return AttackSettings(
            norm=self.norm,
            sims=self.sims,
            alpha=self.alpha,
            neighbor_limit=self.neighbor_limit,
            budget_fraction=self.budget_fraction,
            max_iterations=self.max_iterations,
            depth=self.depth,
            sampling=self.sampling,
            seed=self.seed,
        )


# ============================================================================
# Report records
# ============================================================================


class CertificationRecord(BaseModel):
    """One certified lower bound for a (text, index set) pair."""
    text_id: int = Field(..., ge=0)
    indices: List[int] = Field(..., min_length=1)
    norm: Norm
    eps_lower: float = Field(..., ge=0.0)
    normalized: float = Field(..., ge=0.0)
    bisection_steps: int = Field(..., ge=0)
    predicted_class: int = Field(..., ge=0)

    @model_validator(mode="after")
    def validate_normalized(self) -> "CertificationRecord":
        if self.eps_lower > 0 and self.normalized <= 0:
            raise ValueError("normalized must be positive when eps_lower is")
        return self


class SubstitutionEntry(BaseModel):
    index: int = Field(..., ge=0)
    original: str
    replacement: str


class SubstitutionRecordModel(BaseModel):
    """A class-changing substitution found by the attack."""
    replaced: List[SubstitutionEntry] = Field(..., min_length=1)
    distance: float = Field(..., gt=0.0)
    new_class: int = Field(..., ge=0)
    confidence_drop: float


class AttackRecord(BaseModel):
    text_id: int = Field(..., ge=0)
    predicted_class: int = Field(..., ge=0)
    norm: Norm
    upper_bound: float = Field(..., ge=0.0)
    normalized_upper_bound: float = Field(..., ge=0.0)
    explored_fraction: float = Field(..., ge=0.0, le=1.0)
    per_text_hit: bool
    per_word_hit_rate: float = Field(..., ge=0.0, le=1.0)
    substitutions: List[SubstitutionRecordModel] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_hits(self) -> "AttackRecord":
        if self.per_text_hit != bool(self.substitutions):
            raise ValueError("per_text_hit must be true exactly when substitutions were found")
        if self.substitutions:
            best = min(s.distance for s in self.substitutions)
            if abs(best - self.upper_bound) > 1e-12:
                raise ValueError("upper_bound must equal the closest substitution distance")
        return self


class WordSaliency(BaseModel):
    index: int = Field(..., ge=0)
    token: str
    eps_lower: float = Field(..., ge=0.0)
    normalized: float = Field(..., ge=0.0)


class SaliencyRecord(BaseModel):
    text_id: int = Field(..., ge=0)
    norm: Norm
    predicted_class: int = Field(..., ge=0)
    words: List[WordSaliency]
    ranking: List[int]

    @model_validator(mode="after")
    def validate_ranking(self) -> "SaliencyRecord":
        if sorted(self.ranking) != sorted(w.index for w in self.words):
            raise ValueError("ranking must be a permutation of the word indices")
        by_index = {w.index: w.eps_lower for w in self.words}
        keys = [(by_index[i], i) for i in self.ranking]
        if keys != sorted(keys):
            raise ValueError("ranking must be ascending by eps_lower, ties by index")
        return self


class RunSummary(BaseModel):
    """Aggregate statistics of a run (population standard deviation)."""
    count: int = Field(..., ge=0)
    mean_normalized: Optional[float] = None
    std_normalized: Optional[float] = None
    per_text_rate: Optional[float] = None
    per_word_rate: Optional[float] = None
    mean_upper_bound: Optional[float] = None
    mean_normalized_upper_bound: Optional[float] = None
    positional_profile: Optional[Dict[str, float]] = None


# ============================================================================
# Attack settings
# ============================================================================


class AttackSettings(BaseModel):
    """Parameters of one substitution search."""
    norm: Norm = Norm.L2
    sims: int = Field(default_factory=lambda: config.sims, ge=1)
    alpha: float = Field(default_factory=lambda: config.alpha, ge=0.0)
    neighbor_limit: int = Field(default_factory=lambda: config.neighbor_limit, ge=2)
    budget_fraction: float = Field(default_factory=lambda: config.budget_fraction, gt=0.0, le=1.0)
    max_iterations: int = Field(default_factory=lambda: config.max_iterations, ge=1)
    depth: int = Field(default_factory=lambda: config.depth, ge=1)
    sampling: Literal["pickup", "uniform"] = "pickup"
    seed: int = Field(default_factory=lambda: config.seed, ge=0)
