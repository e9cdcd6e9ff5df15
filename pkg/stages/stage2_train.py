import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from seq2seq.model import Example, Graph2SeqModel
from seq2seq.vocab import Vocab
from stages.stage1_generate import read_records
from tensor.autodiff import Tape, backward
from tensor.optim import AdamState, adam_step
from utils.checkpoint import load_checkpoint, save_checkpoint
from utils.config import RunConfig
from utils.errors import CheckpointError, DataError, TrainError, UsageError
from utils.op_counter import OpCounter

logger = logging.getLogger("LDGCN")


@dataclass
class TrainResult:
    model: Graph2SeqModel
    losses: List[float] = field(default_factory=list)
    accuracies: List[float] = field(default_factory=list)
    checkpoint: Optional[Path] = None
    metrics: Optional[Path] = None


def meta_path(checkpoint) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.name + ".meta.json")


def load_examples(path) -> List[Example]:
    """Dataset records as training examples; every record needs a target."""
    examples = []
    for i, (graph, target) in enumerate(read_records(path)):
        if target is None:
            raise DataError(f"{path} record {i} has no target sentence")
        examples.append(Example.from_graph(i, graph, target))
    if not examples:
        raise DataError(f"{path} contains no records")
    return examples


def build_vocab(examples: List[Example]) -> Vocab:
    return Vocab.build([ex.graph.concepts for ex in examples] + [ex.target for ex in examples])


def save_model(model: Graph2SeqModel, checkpoint) -> Path:
    """Writes the checkpoint plus a sidecar holding the run config and vocabulary."""
    path = save_checkpoint(checkpoint, model.store.as_dict())
    meta = {"config": model.cfg.to_dict(), "vocab": model.vocab.tokens}
    try:
        with open(meta_path(path), "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=4)
    except OSError as e:
        raise CheckpointError(f"cannot write {meta_path(path)}: {e}")
    return path


def load_model(checkpoint) -> Graph2SeqModel:
    """Rebuilds a model from a checkpoint and its sidecar."""
    try:
        with open(meta_path(checkpoint), "r", encoding="utf-8") as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cannot read {meta_path(checkpoint)}: {e}")
    cfg = RunConfig.from_dict(meta["config"])
    model = Graph2SeqModel(Vocab(meta["vocab"][4:]), cfg)
    try:
        model.store.load(load_checkpoint(checkpoint))
    except UsageError as e:
        raise CheckpointError(f"{checkpoint} does not match its model description: {e}")
    return model


def train_epoch(model: Graph2SeqModel, examples: List[Example], state: AdamState, order: np.ndarray,
                epoch: int, lr: float, counter: Optional[OpCounter] = None) -> Tuple[float, float, AdamState]:
    """One pass of per-example Adam updates; returns (mean loss, token accuracy, state)."""
    loss_sum, correct, total = 0.0, 0, 0
    for idx in order:
        example = examples[int(idx)]
        tape = Tape(counter)
        loss, hits, steps = model.loss(tape, example)
        value = loss.item()
        if not math.isfinite(value):
            logger.error(f"Non-finite loss {value} at epoch {epoch}, example {example.example_id}.")
            raise TrainError(f"non-finite loss {value}", epoch, example.example_id)
        params, state = adam_step(model.store.as_dict(), backward(tape, loss), state, lr=lr)
        model.store.load(params)
        loss_sum += value
        correct += hits
        total += steps
    return loss_sum / len(examples), correct / total, state


def train(cfg: RunConfig, run_timestamp: Optional[str] = None) -> TrainResult:
    """
    Trains on cfg.dataset for cfg.epochs epochs, one Adam step per example in a
    seeded shuffle order. Writes one `epoch<TAB>loss<TAB>token_acc` metrics line
    per epoch and saves the final weights to cfg.checkpoint.
    """
    if not cfg.dataset:
        raise UsageError("train needs a dataset path")
    examples = load_examples(cfg.dataset)
    model = Graph2SeqModel(build_vocab(examples), cfg)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros_like(model.store.as_dict())
    counter = OpCounter(run_timestamp)
    result = TrainResult(model)

    metrics_path = Path(cfg.metrics) if cfg.metrics else Path(cfg.checkpoint).with_suffix(".metrics.tsv")
    lines = []
    logger.info(f"Training {cfg.strategy} model on {len(examples)} examples for {cfg.epochs} epochs.")
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(examples))
        mean_loss, acc, state = train_epoch(model, examples, state, order, epoch, cfg.lr, counter)
        result.losses.append(mean_loss)
        result.accuracies.append(acc)
        lines.append(f"{epoch}\t{mean_loss!r}\t{acc!r}")
        if epoch == 1 or epoch % 10 == 0 or epoch == cfg.epochs:
            logger.info(f"Epoch {epoch}: loss={mean_loss:.4f} token_acc={acc:.4f}")

    try:
        metrics_path.parent.mkdir(parents=True, exist_ok=True)
        metrics_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write metrics {metrics_path}: {e}")
    result.metrics = metrics_path
    result.checkpoint = save_model(model, cfg.checkpoint)
    counter.log_summary()
    if run_timestamp:
        counter.save_summary_to_file()
    return result
