from vision_state_fusion.scene.bases import CameraIntrinsics, Sample, SceneConfig
from vision_state_fusion.scene.builder import (SceneBuilder,
                                               find_ambiguous_pair,
                                               generate_dataset, sample_scene)
from vision_state_fusion.scene.camera import (PinholeCamera, project_point,
                                              render)
from vision_state_fusion.scene.dataset import (Dataset, DatasetHeader,
                                               load_dataset, read_dataset,
                                               split_by_fraction,
                                               split_by_groups, write_dataset)
