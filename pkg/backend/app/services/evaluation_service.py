# backend/app/services/evaluation_service.py
import logging
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import ConfigError, ConfigMismatchError, MetricError
from app.db.checkpoint import Checkpoint
from app.models.unisolver import UnisolverModel
from app.schemas.dataset import Dataset
from app.schemas.model_config import ModelConfig
from app.schemas.pde_components import Family, Sample, SplitTag
from app.schemas.reports import EvalEntry, EvalReport, GroupValue
from app.services.metrics import per_sample_relative_l2, relative_promotion
from app.services.sample_layout import SymbolEmbedder, layout_target, sample_layout_service

logger = logging.getLogger(__name__)

EVAL_BATCH_SIZE = 16

# Maps samples to predictions laid out like `layout_target`
Predictor = Callable[[Sequence[Sample]], np.ndarray]


def model_from_checkpoint(ckpt: Checkpoint) -> UnisolverModel:
    """Rebuild the architecture from the config snapshot and load the stored parameters."""
    model = UnisolverModel(ckpt.model_config, np.random.default_rng(ckpt.train_config.seed))
    model.load_state_dict(ckpt.params)
    return model


def check_declared_config(snapshot: ModelConfig, declared: ModelConfig, dataset: Optional[Dataset] = None) -> None:
    """
    Every field the declared config sets explicitly must agree with the checkpoint snapshot.

    With a dataset, the declared config is first resolved against it the way
    training resolves it, so an echoed run config compares equal on layout fields.
    """
    resolved = sample_layout_service.resolve_model_config(declared, dataset) if dataset is not None else declared
    mismatched = sorted(
        name for name in declared.model_fields_set
        if getattr(resolved, name) != getattr(snapshot, name)
    )
    if mismatched:
        details = ", ".join(f"{n}: checkpoint {getattr(snapshot, n)!r} vs config {getattr(resolved, n)!r}"
                            for n in mismatched)
        raise ConfigMismatchError(mismatched, f"Config does not match checkpoint snapshot ({details})")


def group_of(sample: Sample, names: Tuple[str, ...]) -> Dict[str, GroupValue]:
    if sample.family == Family.FAMILY1D:
        return {"boundary": sample.components.boundary.label()}
    return {name: float(sample.components.coefficients[name]) for name in names}


class EvaluationService:
    def predict(self, model: UnisolverModel, samples: Sequence[Sample], embedder: SymbolEmbedder,
                batch_size: int = EVAL_BATCH_SIZE) -> np.ndarray:
        """Predictions for `samples`, shaped like their layout targets."""
        outputs = []
        for batch in sample_layout_service.iter_batches(samples, model.config, embedder, batch_size):
            outputs.append(model(batch.inputs, batch.conditions).data)
        return np.concatenate(outputs, axis=0)

    def evaluate(
        self,
        model: Union[UnisolverModel, Checkpoint, None],
        dataset: Dataset,
        split: Optional[SplitTag] = None,
        baseline_report: Optional[EvalReport] = None,
        predictor: Optional[Predictor] = None,
        embedder: Optional[SymbolEmbedder] = None,
        embedding_file: Optional[Path] = None,
        name: Optional[str] = None,
    ) -> EvalReport:
        """
        Relative L2 per (condition group, split tag).

        Condition groups declared by the dataset but without samples are listed
        with count 0 and no error value. Either a model (or checkpoint) or an
        explicit `predictor` supplies the predictions.
        """
        if isinstance(model, Checkpoint):
            model = model_from_checkpoint(model)
        if model is not None:
            sample_layout_service.check_compatible(model.config, dataset)
        samples = dataset.samples if split is None else [s for s in dataset.samples if s.split == split]
        names = tuple(dataset.header.coefficient_names)

        errors = np.zeros(0)
        if samples:
            if predictor is not None:
                predictions = np.asarray(predictor(samples), dtype=np.float64)
            elif model is not None:
                embedder = embedder or sample_layout_service.make_symbol_embedder(model.config, embedding_file)
                predictions = self.predict(model, samples, embedder)
            else:
                raise ConfigError("evaluate needs a model, a checkpoint or a predictor")
            truths = np.stack([layout_target(s) for s in samples])
            errors = per_sample_relative_l2(predictions, truths)

        buckets: "OrderedDict[tuple, Tuple[Dict[str, GroupValue], SplitTag, List[float]]]" = OrderedDict()
        if dataset.header.family != Family.FAMILY1D:
            for group in dataset.header.condition_groups:
                if split is None or group.split == split:
                    values = {n: float(group.values[n]) for n in names}
                    buckets[EvalEntry(group=values, split=group.split).key()] = (values, group.split, [])
        for sample, err in zip(samples, errors):
            values = group_of(sample, names)
            key = EvalEntry(group=values, split=sample.split).key()
            buckets.setdefault(key, (values, sample.split, []))[2].append(float(err))

        entries = []
        for values, tag, errs in buckets.values():
            entry = EvalEntry(group=values, split=tag, count=len(errs), rel_l2=float(np.mean(errs)) if errs else None)
            if baseline_report is not None and entry.rel_l2 is not None:
                other = baseline_report.entry(values, tag)
                if other is not None and other.rel_l2 is not None:
                    try:
                        entry.promotion = relative_promotion(entry.rel_l2, other.rel_l2)
                    except MetricError as exc:
                        logger.warning(f"No promotion for {values} ({tag.value}): {exc.message}")
            entries.append(entry)
            if not errs:
                logger.warning(f"Condition group {values} ({tag.value}) has no samples; reported as absent")

        split_means = {
            tag.value: float(np.mean([e for s, e in zip(samples, errors) if s.split == tag]))
            for tag in SplitTag if any(s.split == tag for s in samples)
        }
        report = EvalReport(
            name=name or (model.config.baseline.value if model is not None else "predictor"),
            entries=entries,
            overall_mean=float(np.mean(errors)) if len(errors) else None,
            split_means=split_means,
            baseline=baseline_report.name if baseline_report is not None else None,
        )
        logger.info(f"Evaluated {len(samples)} samples over {len(entries)} groups; mean relative L2 "
                    f"{report.overall_mean}")
        return report


evaluation_service = EvaluationService()


def evaluate(model, dataset: Dataset, split: Optional[SplitTag] = None, **kwargs) -> EvalReport:
    return evaluation_service.evaluate(model, dataset, split, **kwargs)
