""" Flat, namespaced experiment configuration.

    Values are resolved in this order, later sources winning:

    1. the defaults of the typed configuration dataclasses (``scene.*``,
       ``augment.*``, ``train.*``, ``qat.*``) and of the evaluation
       protocol (``eval.*``),
    2. a scene preset (``gen --preset d2h``),
    3. a config file of ``key = value`` lines with ``#`` comments,
    4. command-line overrides ``--section.key value`` or ``--set key=value``.

    The resolved map is echoed as ``resolved_config.txt`` next to every
    output; that file is itself a valid config file.
"""
import collections
import dataclasses
import logging
import os
from typing import Dict, Iterable, List, Optional, Tuple

from vision_state_fusion import registration
from vision_state_fusion.augment.pipeline import AugmentConfig
from vision_state_fusion.errors import UsageError
from vision_state_fusion.scene.bases import SceneConfig
from vision_state_fusion.training.trainer import QATConfig, TrainConfig

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = 'resolved_config.txt'

SECTIONS = collections.OrderedDict([
    ('scene', SceneConfig),
    ('augment', AugmentConfig),
    ('train', TrainConfig),
    ('qat', QATConfig),
])
# fields that are not configured through the flat map
EXCLUDED_FIELDS = {'train': ('qat', 'log_path')}

EVAL_DEFAULTS = collections.OrderedDict([
    ('eval.arch', 'desknet'),
    ('eval.variants', ('stateless', 'mlp_branch')),
    ('eval.seeds', 5),
    ('eval.base_seed', 0),
    ('eval.split', (0.6, 0.1, 0.3)),
    ('eval.val_fraction', 0.1),
])


def _dataclass_defaults() -> Dict[str, object]:
    defaults = collections.OrderedDict()
    for section, cls in SECTIONS.items():
        for field in dataclasses.fields(cls):
            if field.name in EXCLUDED_FIELDS.get(section, ()):
                continue
            defaults[f'{section}.{field.name}'] = field.default
    return defaults


def default_values() -> Dict[str, object]:
    defaults = _dataclass_defaults()
    defaults.update(EVAL_DEFAULTS)
    return defaults


def format_value(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (tuple, list)):
        return ', '.join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_value(text: str, default):
    """Parse ``text`` into the type of ``default``."""
    text = text.strip()
    if isinstance(default, bool):
        lowered = text.lower()
        if lowered in ('true', 'yes', '1', 'on'):
            return True
        if lowered in ('false', 'no', '0', 'off'):
            return False
        raise ValueError(f'expected a boolean, got {text!r}')
    if isinstance(default, tuple):
        items = [t for t in (s.strip() for s in text.split(',')) if t]
        if len(default) and not isinstance(default[0], str):
            if len(items) != len(default):
                raise ValueError(f'expected {len(default)} comma-separated '
                                 f'values, got {text!r}')
            return tuple(parse_value(t, default[0]) for t in items)
        return tuple(items)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def read_config_file(path) -> List[Tuple[str, str]]:
    """(key, raw value) pairs of a ``key = value`` file, in file order."""
    pairs = []
    with open(os.fspath(path)) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise UsageError(f'{path}, line {line_no}: expected '
                                 f'"key = value", got {line!r}')
            key, value = line.split('=', 1)
            pairs.append((key.strip(), value.strip()))
    return pairs


def split_assignment(text: str) -> Tuple[str, str]:
    if '=' not in text:
        raise UsageError(f'--set expects key=value, got {text!r}')
    key, value = text.split('=', 1)
    return key.strip(), value.strip()


def parse_overrides(tokens: Iterable[str]) -> List[Tuple[str, str]]:
    """ Turn leftover command-line tokens into (key, raw value) pairs.

        Accepts ``--scene.seed 3`` and ``--scene.seed=3``.
    """
    tokens = list(tokens)
    pairs = []
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith('--') or '.' not in token.split('=')[0]:
            raise UsageError(f'Unrecognized argument: {token}')
        if '=' in token:
            key, value = token[2:].split('=', 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise UsageError(f'Missing value for {token}')
            key, value = token[2:], tokens[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


class ExperimentConfig(object):
    """ Flat map of namespaced configuration keys.

        Every consumed key has a default; setting a key that has none raises
        UsageError.
    """

    def __init__(self, values: Optional[Dict[str, object]] = None):
        self.defaults = default_values()
        self.values = collections.OrderedDict(self.defaults)
        self.explicit = set()
        for key, value in (values or {}).items():
            self.set_value(key, value)

    def __contains__(self, key: str) -> bool:
        return key in self.defaults

    def __getitem__(self, key: str):
        if key not in self.defaults:
            raise UsageError(f'Unknown config key: {key}')
        return self.resolved()[key]

    def resolved(self) -> Dict[str, object]:
        """The values actually used: a patience that was never set is capped
        at the number of epochs."""
        values = collections.OrderedDict(self.values)
        if 'train.patience' not in self.explicit:
            values['train.patience'] = min(values['train.patience'],
                                           values['train.epochs'])
        return values

    def set_value(self, key: str, value) -> None:
        if key not in self.defaults:
            raise UsageError(f'Unknown config key: {key}. Known sections: '
                             f'{", ".join(list(SECTIONS) + ["eval"])}')
        self.values[key] = value
        self.explicit.add(key)

    def set(self, key: str, text: str) -> None:
        """Set ``key`` from its textual form."""
        if key not in self.defaults:
            raise UsageError(f'Unknown config key: {key}')
        try:
            self.values[key] = parse_value(text, self.defaults[key])
        except ValueError as e:
            raise UsageError(f'Bad value for {key}: {e}') from e
        self.explicit.add(key)

    def update(self, pairs: Iterable[Tuple[str, str]]) -> None:
        for key, text in pairs:
            self.set(key, text)

    def load_file(self, path) -> None:
        try:
            pairs = read_config_file(path)
        except OSError as e:
            raise UsageError(f'Cannot read config file {path}: {e}') from e
        self.update(pairs)
        logger.debug('Loaded %d config entries from %s', len(pairs), path)

    def apply_scene_preset(self, preset: str) -> None:
        spec = registration.spec(preset)
        if spec.kind != 'scene':
            raise UsageError(f'Preset={preset} is not a scene preset')
        for key, value in spec.kwargs.items():
            self.set_value(f'scene.{key}', value)

    def section(self, name: str) -> Dict[str, object]:
        prefix = name + '.'
        return {
            k[len(prefix):]: v
            for k, v in self.resolved().items() if k.startswith(prefix)
        }

    def _build(self, name: str, **extra):
        try:
            return SECTIONS[name](**self.section(name), **extra)
        except (AssertionError, TypeError, ValueError) as e:
            raise UsageError(f'Invalid {name} configuration: {e}') from e

    def scene_config(self) -> SceneConfig:
        return self._build('scene')

    def augment_config(self) -> AugmentConfig:
        return self._build('augment')

    def qat_config(self) -> QATConfig:
        return self._build('qat')

    def train_config(self, log_path: Optional[str] = None) -> TrainConfig:
        return self._build('train', qat=self.qat_config(), log_path=log_path)

    def to_text(self) -> str:
        lines = []
        section = None
        for key, value in self.resolved().items():
            head = key.split('.', 1)[0]
            if head != section:
                if section is not None:
                    lines.append('')
                lines.append(f'# {head}')
                section = head
            lines.append(f'{key} = {format_value(value)}')
        return '\n'.join(lines) + '\n'

    def write_resolved(self, directory) -> str:
        directory = os.fspath(directory) or '.'
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, RESOLVED_CONFIG_NAME)
        with open(path, 'w') as f:
            f.write(self.to_text())
        return path


def load_config(config_file=None,
                overrides: Iterable[Tuple[str, str]] = (),
                preset: Optional[str] = None) -> ExperimentConfig:
    config = ExperimentConfig()
    if preset:
        config.apply_scene_preset(preset)
    if config_file:
        config.load_file(config_file)
    config.update(overrides)
    return config
