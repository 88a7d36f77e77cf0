import logging

from vision_state_fusion.nets.builder import Model
from vision_state_fusion.nets.quantization import (QuantModel, calibrate,
                                                   enable_fake_quant, quantize)
from vision_state_fusion.scene.dataset import Dataset
from vision_state_fusion.training.trainer import (QATConfig, Trainer,
                                                  dataset_loss)

logger = logging.getLogger(__name__)


class QATTrainer(Trainer):
    """ Fine-tunes with fake-quantized convolutions.

        Activation ranges stay fixed at their calibrated values; candidates
        are the quantized models themselves, starting with the
        post-training quantization of the incoming weights.
    """

    def __init__(self, model: Model, train_data, val_data, ranges,
                 calibration, **kwargs):
        self.ranges = ranges
        self.calibration = calibration
        self.best = None
        super().__init__(model, train_data, val_data, include_initial=True,
                         early_stop_halts=False, **kwargs)
        enable_fake_quant(self.model, ranges)

    def quantized(self) -> QuantModel:
        images, states = self.calibration
        return quantize(self.model, images, states, ranges=self.ranges)

    def validation_loss(self) -> float:
        return dataset_loss(self.quantized(), self.val_data)

    def snapshot(self):
        return self.quantized()

    def restore(self, snapshot) -> None:
        self.best = snapshot


def qat_finetune(model: Model,
                 train_data: Dataset,
                 val_data: Dataset,
                 config: QATConfig = QATConfig(),
                 batch_size: int = 64,
                 seed: int = 0) -> QuantModel:
    """ Quantization-aware fine-tuning of a trained float model.

    The incoming model is left untouched. With zero epochs the result is
    the post-training quantization from the same calibration batch.

    Returns
    -------
    The QuantModel with the lowest validation loss; its ``history``
    attribute holds the QAT TrainHistory (None for zero epochs).
    """
    n = min(config.calibration_size, len(train_data))
    calibration = (train_data.images[:n], train_data.states[:n])
    ranges = calibrate(model, *calibration)
    if config.epochs == 0:
        qmodel = quantize(model, *calibration, ranges=ranges)
        qmodel.history = None
        return qmodel
    trainer = QATTrainer(model.copy(), train_data, val_data, ranges,
                         calibration,
                         learning_rate=config.learning_rate,
                         epochs=config.epochs,
                         batch_size=batch_size,
                         patience=config.epochs,
                         seed=seed,
                         weight_decay=config.weight_decay)
    history = trainer.fit()
    logger.info('QAT: post-training L1=%.5f, best L1=%.5f at epoch %d',
                history.initial_val_loss, history.best_val_loss,
                history.best_epoch)
    qmodel = trainer.best
    qmodel.history = history
    return qmodel
