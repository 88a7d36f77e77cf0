r"""Vision-State Fusion

    Benchmark kit for feeding a robot's state estimate into a visual pose
    regression network.

    Distributed under the MIT License.
"""
from vision_state_fusion.registration import list_presets, make, register

__version__ = '0.1.0'


def get_arch_list():
    return list_presets(kind='arch')


"""Register named presets."""

# ==============================================================================
#       Architectures
# ==============================================================================

# ===== Desk-scale backbone, trained on the synthetic task =====
register(
    id='desknet',
    entry_point='vision_state_fusion.nets.builder:make_arch',
    kind='arch',
    kwargs=dict(
        id='desknet',
        input_shape=(1, 64, 64),
        layers=[
            dict(kind='conv', out_ch=8, k=5, stride=2, pad=2),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='conv', out_ch=16, k=3, stride=2, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='conv', out_ch=32, k=3, stride=2, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='flatten'),
            dict(kind='fc', units=4),
        ],
        outputs=4,
    ),
)

# ===== Nano-drone backbone, shapes only (cost accounting) =====
register(
    id='frontnet_sym',
    entry_point='vision_state_fusion.nets.builder:make_arch',
    kind='arch',
    kwargs=dict(
        id='frontnet_sym',
        input_shape=(1, 96, 160),
        layers=[
            dict(kind='conv', out_ch=32, k=5, stride=2, pad=2),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='maxpool', k=2),
            # stage 1
            dict(kind='conv', out_ch=32, k=3, stride=2, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='conv', out_ch=32, k=3, stride=1, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            # stage 2
            dict(kind='conv', out_ch=64, k=3, stride=2, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='conv', out_ch=64, k=3, stride=1, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            # stage 3
            dict(kind='conv', out_ch=128, k=3, stride=2, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='conv', out_ch=128, k=3, stride=1, pad=1),
            dict(kind='batchnorm'),
            dict(kind='relu'),
            dict(kind='flatten'),
            dict(kind='fc', units=4),
        ],
        outputs=4,
    ),
)

# ==============================================================================
#       Scenes
# ==============================================================================

# ===== Drone observing a human, pitch-only state =====
register(
    id='d2h',
    entry_point='vision_state_fusion.scene.bases:SceneConfig',
    kind='scene',
    kwargs=dict(n_groups=17, state_schema='pitch', label_schema='pose4'),
)

# ===== Drone observing a drone, pitch and roll state =====
register(
    id='d2d',
    entry_point='vision_state_fusion.scene.bases:SceneConfig',
    kind='scene',
    kwargs=dict(n_groups=1, state_schema='pitch_roll', label_schema='pose4'),
)

# ===== Arm camera observing an object, full camera pose as state =====
register(
    id='a2o',
    entry_point='vision_state_fusion.scene.bases:SceneConfig',
    kind='scene',
    kwargs=dict(n_groups=1,
                state_schema='pose',
                label_schema='pose7',
                target_roll_range_deg=(-30.0, 30.0)),
)
