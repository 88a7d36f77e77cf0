from vision_state_fusion.training.losses import l1_loss
from vision_state_fusion.training.optim import Adam, AdamState, adam_step
from vision_state_fusion.training.qat import qat_finetune
from vision_state_fusion.training.trainer import (QATConfig, TrainConfig,
                                                  Trainer, TrainHistory,
                                                  train)
