from .encoding import (
    EncodedSequence,
    EncodingError,
    Vocabulary,
    encode_pair,
    load_pretrained,
)
from .model import ModelFlags, NeuralModel, loss, predict_position
from .optim import Adam
from .training import (
    TrainingConfig,
    TrainingResult,
    accuracy,
    load_checkpoint,
    save_checkpoint,
    train,
)

__all__ = [
    "Adam",
    "EncodedSequence",
    "EncodingError",
    "ModelFlags",
    "NeuralModel",
    "TrainingConfig",
    "TrainingResult",
    "Vocabulary",
    "accuracy",
    "encode_pair",
    "load_checkpoint",
    "load_pretrained",
    "loss",
    "predict_position",
    "save_checkpoint",
    "train",
]
