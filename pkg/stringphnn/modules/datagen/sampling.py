"""随机激励采样"""

import numpy as np

from stringphnn.modules.config.schema import DatasetSpec
from stringphnn.modules.core.types import ExcitationSpec, GridSpec


def sample_excitation(rng: np.random.Generator, spec: DatasetSpec, grid: GridSpec) -> ExcitationSpec:
    """t_e ~ U[t_e_min, t_e_max]，f_amp ~ U[f_amp_min, f_amp_max]，s_e ~ U{lo..hi}（闭区间）"""
    t_e = float(rng.uniform(spec.t_e_min, spec.t_e_max))
    f_amp = float(rng.uniform(spec.f_amp_min, spec.f_amp_max))
    lo, hi = spec.node_range(grid)
    node_e = int(rng.integers(lo, hi, endpoint=True))
    return ExcitationSpec(f_amp=f_amp, t_e=t_e, node_e=node_e)
