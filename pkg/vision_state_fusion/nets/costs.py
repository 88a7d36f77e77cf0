"""Memory and compute accounting of architectures and fusion variants.

Conventions: one byte per parameter (8-bit deployment), one MAC per weight
application; biases, batch normalization, ReLU and pooling cost no MACs.
Running statistics of batch normalization are not parameters.
"""
import dataclasses
from typing import Dict, List, Optional, Tuple

from vision_state_fusion.nets.bases import VARIANTS, ArchSpec, FusionVariant
from vision_state_fusion.nets.builder import build_layers

# published deltas of PUBLISHED_ARCH vs. its stateless network (bytes, MACs)
# and whether the published number is exact or rounded
PUBLISHED_ARCH = 'frontnet_sym'
PUBLISHED_DELTAS = {
    'stateless': ((0, 0), True),
    'single_neuron': ((4, 4), True),
    'fully_connected': ((54_000, 54_000), False),
    'double_input': ((800, 3_072_000), True),
    'mlp_branch': ((120, 104), True),
}


@dataclasses.dataclass(frozen=True)
class Costs:
    params: int
    macs: int

    @property
    def bytes(self) -> int:
        return self.params

    def __sub__(self, other: 'Costs') -> 'Costs':
        return Costs(self.params - other.params, self.macs - other.macs)


@dataclasses.dataclass(frozen=True)
class CostReport:
    arch: str
    variant: str
    total: Costs
    delta: Costs
    layers: Tuple[Tuple[str, str, int, int], ...]

    def status(self) -> str:
        """MATCH when the delta equals an exact published figure."""
        if (self.arch != PUBLISHED_ARCH
                or self.variant not in PUBLISHED_DELTAS):
            return 'UNPUBLISHED'
        (b, m), exact = PUBLISHED_DELTAS[self.variant]
        if exact and (self.delta.bytes, self.delta.macs) == (b, m):
            return 'MATCH'
        return 'DISCREPANCY'


def _total(arch: ArchSpec, variant: FusionVariant):
    rows = []
    for sec, layers in build_layers(arch, variant).items():
        for layer in layers:
            rows.append((layer.name, str(layer.output_shape),
                         layer.n_params(), layer.macs()))
    return Costs(sum(r[2] for r in rows), sum(r[3] for r in rows)), rows


def count_costs(arch: ArchSpec, variant: FusionVariant) -> CostReport:
    total, rows = _total(arch, variant)
    reference, _ = _total(arch, variant.stateless)
    return CostReport(arch=arch.id,
                      variant=variant.name,
                      total=total,
                      delta=total - reference,
                      layers=tuple(rows))


def cost_table(arch: ArchSpec,
               variants: Optional[List[str]] = None,
               state_dim: int = 1) -> List[CostReport]:
    return [
        count_costs(arch, FusionVariant(v, state_dim))
        for v in (variants or VARIANTS)
    ]


def format_cost_table(reports: List[CostReport],
                      compare_published: bool = False) -> str:
    header = f'{"variant":<16} {"bytes":>10} {"MACs":>12} ' \
             f'{"d_bytes":>9} {"d_MACs":>11}'
    if compare_published:
        header += f' {"pub_bytes":>10} {"pub_MACs":>11}  status'
    lines = [header]
    for r in reports:
        line = (f'{r.variant:<16} {r.total.bytes:>10} {r.total.macs:>12} '
                f'{r.delta.bytes:>+9} {r.delta.macs:>+11}')
        if compare_published:
            (b, m), exact = PUBLISHED_DELTAS.get(r.variant, ((0, 0), False))
            mark = '' if exact else '~'
            line += (f' {mark + format(b, "+"):>10} '
                     f'{mark + format(m, "+"):>11}  {r.status()}')
        lines.append(line)
    return '\n'.join(lines)


def published_deltas() -> Dict[str, Tuple[int, int]]:
    return {k: v for k, (v, _) in PUBLISHED_DELTAS.items()}
