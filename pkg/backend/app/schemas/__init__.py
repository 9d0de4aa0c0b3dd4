# backend/app/schemas/__init__.py

from .pde_components import (  # noqa: F401
    BoundaryKind, BoundarySpec, ComponentCategory, ComponentKind, Family, GridSpec, PDEComponents,
    RobinParams, Sample, Side, SplitTag,
)
from .string_problem import QuadSpec, SampledForcing, SampledProfile, SineSeries, StringProblem  # noqa: F401
from .solver_specs import Family1DSpec, HeterNSSpec  # noqa: F401
from .task_spec import ConditionGroup, TaskSpec  # noqa: F401
from .dataset import Dataset, DatasetHeader  # noqa: F401
from .model_config import BaselineKind, ModelConfig  # noqa: F401
from .train_config import AdamConfig, RunConfig, TrainConfig  # noqa: F401
from .reports import EvalEntry, EvalReport, LossRecord, TrainSummary  # noqa: F401

__all__ = [
    "BoundaryKind", "BoundarySpec", "ComponentCategory", "ComponentKind", "Family", "GridSpec",
    "PDEComponents", "RobinParams", "Sample", "Side", "SplitTag",
    "QuadSpec", "SampledForcing", "SampledProfile", "SineSeries", "StringProblem",
    "Family1DSpec", "HeterNSSpec",
    "ConditionGroup", "TaskSpec",
    "Dataset", "DatasetHeader",
    "BaselineKind", "ModelConfig",
    "AdamConfig", "RunConfig", "TrainConfig",
    "EvalEntry", "EvalReport", "LossRecord", "TrainSummary",
]
