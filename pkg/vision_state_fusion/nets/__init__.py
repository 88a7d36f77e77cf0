from vision_state_fusion.nets.bases import (VARIANTS, ArchSpec, FusionVariant,
                                            Layer)
from vision_state_fusion.nets.builder import (Model, backward, build_layers,
                                              describe, forward, make_arch,
                                              preprocess)
from vision_state_fusion.nets.costs import CostReport, Costs, count_costs
from vision_state_fusion.nets.quantization import (QuantModel, q_forward,
                                                   quantize)
from vision_state_fusion.nets.serialization import load_model, save_model
