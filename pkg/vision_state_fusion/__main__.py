import sys

from vision_state_fusion.cli.main import main

sys.exit(main())
