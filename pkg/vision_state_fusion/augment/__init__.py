from vision_state_fusion.augment.geometric import hflip, pitch_warp
from vision_state_fusion.augment.photometric import (add_noise,
                                                     apply_exposure,
                                                     apply_gamma, apply_range,
                                                     blur, vignette)
from vision_state_fusion.augment.pipeline import (AugmentConfig,
                                                  augment_dataset,
                                                  augment_pipeline)
