from vision_state_fusion.evaluation.experiments import (DataSplits,
                                                        PairedComparison,
                                                        evaluate,
                                                        loo_crossval,
                                                        paired_experiment)
from vision_state_fusion.evaluation.metrics import (EvalReport, dummy_mse, mae,
                                                    mean_rotation_error_deg,
                                                    mse, r2_score,
                                                    relative_mae_reduction)
from vision_state_fusion.evaluation.stats import median_delta, wilcoxon_exact
