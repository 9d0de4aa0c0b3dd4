# backend/app/services/training_service.py
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from app.autodiff.tensor import backward
from app.core.exceptions import ConfigError, TrainingDivergedError
from app.db.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from app.db.records import append_jsonl, write_jsonl
from app.models.symbol_embedder import PrecomputedSymbolEmbedder
from app.models.unisolver import UnisolverModel
from app.schemas.dataset import Dataset
from app.schemas.model_config import ModelConfig
from app.schemas.pde_components import SplitTag
from app.schemas.reports import LossRecord, TrainSummary
from app.schemas.train_config import TrainConfig
from app.services.component_service import component_service
from app.services.evaluation_service import EVAL_BATCH_SIZE, evaluation_service
from app.services.metrics import per_sample_relative_l2, relative_l2_loss
from app.services.optimizer import AdamState, adam_step, cosine_lr
from app.services.sample_layout import ModelBatch, sample_layout_service

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.uckp"
CURVE_NAME = "loss_curve.jsonl"
SUMMARY_NAME = "train_summary.json"


@dataclass
class TrainResult:
    model: UnisolverModel
    checkpoint_path: Path
    curve: List[LossRecord]
    summary: TrainSummary


def validation_split(n: int, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(train, validation) positions from a seed-stable shuffle; at least one training sample remains."""
    perm = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,))).permutation(n)
    n_val = min(int(round(fraction * n)), n - 1) if n > 1 else 0
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


class TrainingService:
    def _batch_errors(self, model: UnisolverModel, batch: ModelBatch) -> np.ndarray:
        errors = []
        for start in range(0, len(batch), EVAL_BATCH_SIZE):
            part = batch.take(range(start, min(start + EVAL_BATCH_SIZE, len(batch))))
            errors.append(per_sample_relative_l2(model(part.inputs, part.conditions).data, part.targets))
        return np.concatenate(errors)

    def train(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig,
        dataset: Dataset,
        output_dir: Path,
        embedding_file: Optional[Path] = None,
    ) -> TrainResult:
        """
        Minibatch training on the ID samples with a relative L2 loss.

        A seed-stable share of the ID samples is held out for validation; the
        checkpoint with the best validation loss (training loss when nothing is
        held out) is kept. The reported final loss is the mean relative L2 of
        that checkpoint over the whole ID split.
        """
        output_dir = Path(output_dir)
        samples = dataset.select(SplitTag.ID).samples
        if not samples:
            raise ConfigError("the dataset has no in-distribution samples to train on")
        for index, sample in enumerate(samples):
            violations = component_service.validate(sample, dataset.header.grid)
            if violations:
                raise ConfigError(f"training sample {index} fails validation: {violations}")

        config = sample_layout_service.resolve_model_config(model_config, dataset)
        embedder = sample_layout_service.make_symbol_embedder(config, embedding_file)
        if isinstance(embedder, PrecomputedSymbolEmbedder):
            embedder.check_coverage(s.components.symbols for s in dataset.samples)

        model = UnisolverModel(config, np.random.default_rng(train_config.seed))
        params = model.parameters()
        shuffle_rng = np.random.default_rng(np.random.SeedSequence(train_config.seed, spawn_key=(1,)))
        logger.info(f"Training {config.baseline.value} model ({model.parameter_count()} parameters) "
                    f"on {len(samples)} samples for {train_config.epochs} epochs")

        full = sample_layout_service.build_batch(samples, config, embedder)
        train_pos, val_pos = validation_split(len(samples), train_config.val_fraction, train_config.seed)
        val_batch = full.take(val_pos) if len(val_pos) else None

        steps_per_epoch = math.ceil(len(train_pos) / train_config.batch_size)
        total_steps = train_config.epochs * steps_per_epoch
        warmup_steps = train_config.warmup_epochs * steps_per_epoch

        ckpt_path = output_dir / CHECKPOINT_NAME
        curve_path = output_dir / CURVE_NAME
        write_jsonl(curve_path, [])
        state = AdamState()
        curve: List[LossRecord] = []
        best, best_epoch, saved, step = math.inf, 0, False, 0

        for epoch in range(1, train_config.epochs + 1):
            order = train_pos[shuffle_rng.permutation(len(train_pos))]
            weighted, lr = 0.0, train_config.lr_init
            for start in range(0, len(order), train_config.batch_size):
                batch = full.take(order[start:start + train_config.batch_size])
                lr = cosine_lr(step, total_steps, train_config.lr_init, train_config.lr_min, warmup_steps)
                model.zero_grad()
                loss = relative_l2_loss(model(batch.inputs, batch.conditions), batch.targets)
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingDivergedError(
                        f"non-finite loss at epoch {epoch}, step {step}",
                        checkpoint_path=str(ckpt_path) if saved else None,
                    )
                backward(loss)
                adam_step(params, {name: t.grad for name, t in params.items()}, state, lr, train_config.adam)
                weighted += value * len(batch)
                step += 1

            record = LossRecord(
                epoch=epoch,
                lr=lr,
                train_loss=weighted / len(train_pos),
                val_loss=float(np.mean(self._batch_errors(model, val_batch))) if val_batch is not None else None,
            )
            curve.append(record)
            append_jsonl(curve_path, record)
            logger.info(f"Epoch {epoch}: lr {record.lr:.3e}, train {record.train_loss:.6e}, val {record.val_loss}")

            criterion = record.val_loss if record.val_loss is not None else record.train_loss
            if criterion < best:
                best, best_epoch = criterion, epoch
                save_checkpoint(ckpt_path, Checkpoint(
                    model_config=config,
                    train_config=train_config,
                    params=model.state_dict(),
                    epoch=epoch,
                    rng_state=shuffle_rng.bit_generator.state,
                ))
                saved = True

        if not saved:
            raise TrainingDivergedError("no epoch reached a finite loss")

        model.load_state_dict(load_checkpoint(ckpt_path).params)
        final = evaluation_service.evaluate(model, dataset, SplitTag.ID, embedder=embedder).overall_mean
        summary = TrainSummary(
            checkpoint=str(ckpt_path),
            epochs=train_config.epochs,
            best_epoch=best_epoch,
            final_train_loss=final,
            parameter_count=model.parameter_count(),
        )
        (output_dir / SUMMARY_NAME).write_text(summary.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Final training loss {final!r} (checkpoint from epoch {best_epoch})")
        return TrainResult(model=model, checkpoint_path=ckpt_path, curve=curve, summary=summary)


training_service = TrainingService()


def train(model_config: ModelConfig, train_config: TrainConfig, dataset: Dataset, output_dir: Path,
          embedding_file: Optional[Path] = None) -> TrainResult:
    return training_service.train(model_config, train_config, dataset, output_dir, embedding_file)
