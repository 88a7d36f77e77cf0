import csv
import dataclasses
import logging
import math
import os
from typing import List, Optional, Tuple

import numpy as np

from vision_state_fusion.errors import NumericalError, SchemaMismatchError
from vision_state_fusion.nets.builder import Model, preprocess
from vision_state_fusion.scene.dataset import Dataset
from vision_state_fusion.training.losses import l1_loss
from vision_state_fusion.training.optim import Adam
from vision_state_fusion.utils import make_rng, stable_key

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class QATConfig:
    epochs: int = 10
    learning_rate: float = 1e-4
    weight_decay: float = 1e-6
    calibration_size: int = 256

    def __post_init__(self):
        assert self.epochs >= 0, f'epochs={self.epochs} must be >= 0'
        assert self.learning_rate > 0 and self.weight_decay >= 0
        assert self.calibration_size >= 1


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 64
    patience: int = 15
    seed: int = 0
    early_stop_halts: bool = True
    weight_decay: float = 0.
    qat: QATConfig = QATConfig()
    log_path: Optional[str] = None

    def __post_init__(self):
        assert self.learning_rate > 0, f'learning_rate={self.learning_rate}'
        assert self.epochs >= 1, f'epochs={self.epochs} must be positive'
        assert self.batch_size >= 1, f'batch_size={self.batch_size}'
        assert 1 <= self.patience <= self.epochs, \
            f'patience={self.patience} must lie in [1, epochs={self.epochs}]'
        assert self.weight_decay >= 0


@dataclasses.dataclass
class TrainHistory:
    """Per-epoch losses; ``best_epoch`` is 1-based (0: initial weights)."""
    train_loss: List[float] = dataclasses.field(default_factory=list)
    val_loss: List[float] = dataclasses.field(default_factory=list)
    best_epoch: int = 0
    initial_val_loss: Optional[float] = None

    @property
    def epochs_run(self) -> int:
        return len(self.val_loss)

    @property
    def best_val_loss(self) -> float:
        if self.best_epoch == 0:
            return self.initial_val_loss
        return self.val_loss[self.best_epoch - 1]

    def rows(self):
        return [(i + 1, t, v)
                for i, (t, v) in enumerate(zip(self.train_loss,
                                               self.val_loss))]

    def write_log(self, path) -> None:
        with open(os.fspath(path), 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['epoch', 'train_l1', 'val_l1'])
            for epoch, t, v in self.rows():
                writer.writerow([epoch, f'{t:.8g}', f'{v:.8g}'])


def check_compatible(model: Model, data: Dataset) -> None:
    if data.label_dim != model.arch.outputs:
        raise SchemaMismatchError(
            f'Dataset labels have {data.label_dim} channels, model '
            f'{model.arch.id} predicts {model.arch.outputs}')
    if model.variant.uses_state and data.state_dim != \
            model.variant.state_dim:
        raise SchemaMismatchError(
            f'Dataset state has {data.state_dim} channels, variant '
            f'{model.variant.name} expects {model.variant.state_dim}')
    height, width = data.image_shape
    if (1, height, width) != model.arch.input_shape:
        raise SchemaMismatchError(
            f'Images are {height}x{width}, model expects '
            f'{model.arch.input_shape}')


def dataset_loss(model, data: Dataset, batch_size: int = 256) -> float:
    """L1 loss of a float or quantized model in inference mode."""
    pred = model.predict(data.images, data.states, batch_size=batch_size)
    loss, _ = l1_loss(pred, data.labels)
    return loss


class Trainer(object):
    """ Epoch loop with seeded shuffling and early stopping on the
        validation L1 loss.

        The returned model carries the parameters of the epoch with the
        lowest validation loss. With ``early_stop_halts`` off the loop runs
        all epochs and still selects that snapshot.
    """

    def __init__(self,
                 model: Model,
                 train_data: Dataset,
                 val_data: Dataset,
                 learning_rate: float = 1e-3,
                 epochs: int = 100,
                 batch_size: int = 64,
                 patience: int = 15,
                 seed: int = 0,
                 early_stop_halts: bool = True,
                 weight_decay: float = 0.,
                 include_initial: bool = False):
        assert len(train_data) > 0, 'Training set is empty'
        assert len(val_data) > 0, 'Validation set is empty'
        check_compatible(model, train_data)
        check_compatible(model, val_data)
        self.model = model
        self.train_data = train_data
        self.val_data = val_data
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.early_stop_halts = early_stop_halts
        self.include_initial = include_initial
        self.rng = make_rng(seed, stable_key('shuffle'))
        self.optimizer = Adam(model.parameters(), lr=learning_rate,
                              weight_decay=weight_decay)

    @classmethod
    def from_config(cls, model, train_data, val_data, config: TrainConfig):
        return cls(model, train_data, val_data,
                   learning_rate=config.learning_rate,
                   epochs=config.epochs,
                   batch_size=config.batch_size,
                   patience=config.patience,
                   seed=config.seed,
                   early_stop_halts=config.early_stop_halts,
                   weight_decay=config.weight_decay)

    def validation_loss(self) -> float:
        return dataset_loss(self.model, self.val_data)

    def snapshot(self):
        return self.model.state_dict()

    def restore(self, snapshot) -> None:
        self.model.load_state_dict(snapshot)

    def run_epoch(self, epoch: int) -> float:
        data = self.train_data
        order = self.rng.permutation(len(data))
        total = 0.
        for batch, start in enumerate(range(0, len(data), self.batch_size)):
            idx = order[start:start + self.batch_size]
            x = preprocess(data.images[idx], self.model.dtype)
            out, cache = self.model.forward(x, data.states[idx],
                                            training=True)
            loss, grad = l1_loss(out, data.labels[idx])
            if not math.isfinite(loss):
                raise NumericalError(f'Non-finite training loss at epoch '
                                     f'{epoch}, batch {batch}')
            grads, _ = self.model.backward(cache, grad)
            self.optimizer.step(grads)
            total += loss * len(idx)
            logger.debug('epoch %d batch %d: L1=%.5f', epoch, batch, loss)
        return total / len(data)

    def fit(self) -> TrainHistory:
        history = TrainHistory()
        best_loss, best_state, since_best = math.inf, None, 0
        if self.include_initial:
            best_loss = history.initial_val_loss = self.validation_loss()
            best_state = self.snapshot()
        for epoch in range(1, self.epochs + 1):
            train_loss = self.run_epoch(epoch)
            val_loss = self.validation_loss()
            if not math.isfinite(val_loss):
                raise NumericalError(
                    f'Non-finite validation loss at epoch {epoch}')
            history.train_loss.append(train_loss)
            history.val_loss.append(val_loss)
            if val_loss < best_loss:
                best_loss, best_state, since_best = val_loss, self.snapshot(), 0
                history.best_epoch = epoch
            else:
                since_best += 1
            logger.info('Epoch %d: train L1=%.5f val L1=%.5f (best epoch %d)',
                        epoch, train_loss, val_loss, history.best_epoch)
            if self.early_stop_halts and since_best >= self.patience:
                logger.info('Early stop after %d epochs without improvement',
                            since_best)
                break
        self.restore(best_state)
        return history


def train(model: Model, train_data: Dataset, val_data: Dataset,
          config: TrainConfig = TrainConfig()) -> Tuple[Model, TrainHistory]:
    """Train ``model`` in place and return it with the best-epoch weights."""
    history = Trainer.from_config(model, train_data, val_data, config).fit()
    if config.log_path:
        history.write_log(config.log_path)
    return model, history
