"""Training loop, model selection and checkpoint I/O."""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoding import EncodedSequence, Vocabulary
from .model import ModelFlags, NeuralModel
from .optim import Adam

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "denotex-bilstm-v1"


@dataclass
class TrainingConfig:
    epochs: int = 50
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    use_positional_features: bool = True
    use_pretrained: bool = False

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    @property
    def flags(self) -> ModelFlags:
        return ModelFlags(self.use_positional_features, self.use_pretrained)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainingResult:
    model: NeuralModel
    best_epoch: int
    history: list[EpochRecord] = field(default_factory=list)


def accuracy(model: NeuralModel, seqs: Sequence[EncodedSequence]) -> float:
    usable = [s for s in seqs if s.gold_position is not None and s.answer_entity_mask.any()]
    if not usable:
        return 0.0
    hits = sum(model.predict(s)[0] == s.gold_position for s in usable)
    return hits / len(usable)


def train(
    train_set: Sequence[EncodedSequence],
    val_set: Sequence[EncodedSequence],
    vocab: Vocabulary,
    config: TrainingConfig | None = None,
    pretrained: dict[str, np.ndarray] | None = None,
) -> TrainingResult:
    """Per-example Adam updates over shuffled epochs; keeps the parameters of the
    epoch with the best validation accuracy (earliest on ties)."""
    config = config or TrainingConfig()
    if not train_set:
        raise ValueError("empty training set")
    if any(s.gold_position is None for s in train_set):
        raise ValueError("every training sequence needs a gold position")

    model = NeuralModel(vocab, config.flags, pretrained, seed=config.seed)
    opt = Adam(config.lr, config.beta1, config.beta2, config.eps)
    rng = np.random.default_rng([config.seed, 1])

    best_acc = -1.0
    best_params = None
    best_epoch = 0
    history: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for idx in rng.permutation(len(train_set)):
            value, grads = model.loss_and_gradients(train_set[idx])
            total += value
            opt.step(model.params, grads)
        rec = EpochRecord(
            epoch,
            total / len(train_set),
            accuracy(model, train_set),
            accuracy(model, val_set),
        )
        history.append(rec)
        log.info(
            "epoch %d loss %.4f train_acc %.4f val_acc %.4f",
            epoch, rec.train_loss, rec.train_accuracy, rec.val_accuracy,
        )
        if rec.val_accuracy > best_acc:
            best_acc = rec.val_accuracy
            best_params = copy.deepcopy(model.params)
            best_epoch = epoch
    model.params = best_params
    return TrainingResult(model, best_epoch, history)


def save_checkpoint(model: NeuralModel, path: str | Path) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "flags": asdict(model.flags),
        "embedding_dim": model.embedding_dim,
        "hidden": model.hidden,
        "vocab": model.vocab.to_dict(),
        "pretrained": (
            {w: v.tolist() for w, v in sorted(model.pretrained.items())} if model.pretrained else None
        ),
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in sorted(model.params.items())
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> NeuralModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
    pretrained = doc["pretrained"]
    if pretrained is not None:
        pretrained = {w: np.asarray(v, dtype=np.float64) for w, v in pretrained.items()}
    model = NeuralModel(
        Vocabulary.from_dict(doc["vocab"]),
        ModelFlags(**doc["flags"]),
        pretrained,
        embedding_dim=doc["embedding_dim"],
        hidden=doc["hidden"],
    )
    for name, spec in doc["params"].items():
        arr = np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
        if name not in model.params or model.params[name].shape != arr.shape:
            raise ValueError(f"{path}: parameter {name} has unexpected shape {arr.shape}")
        model.params[name] = arr
    return model
