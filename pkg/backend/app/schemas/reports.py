# backend/app/schemas/reports.py
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field

from app.schemas.pde_components import SplitTag

GroupValue = Union[float, str]


class LossRecord(BaseModel):
    epoch: int
    lr: float
    train_loss: float
    val_loss: Optional[float] = None


class TrainSummary(BaseModel):
    checkpoint: str
    epochs: int
    best_epoch: int
    final_train_loss: float = Field(..., description="Mean relative L2 of the saved checkpoint over the ID split")
    parameter_count: int


class EvalEntry(BaseModel):
    group: Dict[str, GroupValue]
    split: SplitTag
    count: int = 0
    rel_l2: Optional[float] = Field(None, description="None when the group has no samples")
    promotion: Optional[float] = None

    def key(self) -> tuple:
        return tuple(sorted(self.group.items())), self.split.value


class EvalReport(BaseModel):
    name: str = "unisolver"
    entries: List[EvalEntry] = Field(default_factory=list)
    overall_mean: Optional[float] = None
    split_means: Dict[str, float] = Field(default_factory=dict)
    baseline: Optional[str] = Field(None, description="Report the promotion values compare against")

    def entry(self, group: Dict[str, GroupValue], split: SplitTag) -> Optional[EvalEntry]:
        wanted = EvalEntry(group=group, split=split).key()
        for entry in self.entries:
            if entry.key() == wanted:
                return entry
        return None
