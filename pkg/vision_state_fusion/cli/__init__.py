from vision_state_fusion.cli.config import ExperimentConfig, load_config
from vision_state_fusion.cli.main import build_parser, main
