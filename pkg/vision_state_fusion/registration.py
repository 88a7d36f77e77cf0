"""Registry of named presets (architectures, scene configurations).

Presets are declared once at import time, the same way environments are
registered with an id, an entry point and keyword arguments, and are
instantiated lazily with :func:`make`.
"""
import copy
import importlib

from vision_state_fusion.errors import UnknownPresetError

registry = {}


class PresetSpec:
    """Holds everything needed to build one named preset."""

    def __init__(self, id: str, entry_point: str, kind: str, kwargs: dict):
        self.id = id
        self.entry_point = entry_point
        self.kind = kind
        self.kwargs = kwargs

    def load(self):
        """Resolve ``module.path:attribute`` into the callable."""
        mod_name, attr_name = self.entry_point.split(':')
        module = importlib.import_module(mod_name)
        return getattr(module, attr_name)

    def make(self, **overrides):
        kwargs = copy.deepcopy(self.kwargs)
        kwargs.update(overrides)
        return self.load()(**kwargs)

    def __repr__(self):
        return f'PresetSpec({self.id!r}, kind={self.kind!r})'


def register(id: str, entry_point: str, kind: str, kwargs: dict = None):
    assert id not in registry, f'Preset={id} is already registered.'
    registry[id] = PresetSpec(id=id,
                              entry_point=entry_point,
                              kind=kind,
                              kwargs=kwargs or {})


def spec(id: str) -> PresetSpec:
    if id not in registry:
        raise UnknownPresetError(f'Preset={id} not found. Known presets: '
                                 f'{sorted(registry)}')
    return registry[id]


def make(id: str, **overrides):
    """Instantiate the registered preset ``id``."""
    return spec(id).make(**overrides)


def list_presets(kind: str = None) -> list:
    return sorted(k for k, v in registry.items()
                  if kind is None or v.kind == kind)
