"""Shared helpers: a desk-scale configuration that keeps tests fast.

The small config uses a coarse field grid, small frames and short
horizons; colony radius is bumped so colonies stay resolvable on the
coarse grid.
"""

from wipersim.experiment import ProtocolConfig, RenderConfig
from wipersim.fouling import GrowthParams


def small_growth(**overrides) -> GrowthParams:
    base = dict(rate_per_day=0.3, seed_rate_per_day=3.0,
                colony_radius_mm=4.0, spread_per_day=0.05)
    base.update(overrides)
    return GrowthParams(**base)


def small_config(**overrides) -> ProtocolConfig:
    base = dict(
        observation_days=(0, 2, 4),
        replicates=2,
        growth=small_growth(),
        render=RenderConfig(frame_width=160, frame_height=120),
        field_cell_mm=2.5,
        seed=7,
    )
    base.update(overrides)
    return ProtocolConfig(**base)
