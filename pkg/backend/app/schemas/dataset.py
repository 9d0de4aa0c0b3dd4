# backend/app/schemas/dataset.py
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.pde_components import Family, GridSpec, Sample, SplitTag
from app.schemas.task_spec import ConditionGroup


class DatasetHeader(BaseModel):
    family: Family
    grid: GridSpec
    coefficient_names: Tuple[str, ...]
    condition_groups: List[ConditionGroup] = Field(default_factory=list)
    retries: int = 0
    storage_dtype: Literal["f64", "f32"] = "f64"


class Dataset(BaseModel):
    header: DatasetHeader
    samples: List[Sample]

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def __len__(self) -> int:
        return len(self.samples)

    def select(self, split: SplitTag) -> "Dataset":
        return Dataset(header=self.header, samples=[s for s in self.samples if s.split == split])
