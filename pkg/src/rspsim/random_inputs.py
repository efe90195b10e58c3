"""Random valid (target, channel) pairs for property checks."""
from __future__ import annotations

import numpy as np

from .protocol import ChannelSpec, Protocol, TargetSpec


def _sorted_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        v = np.sort(np.abs(rng.standard_normal(n)))
        if v[0] > 1e-3 * v[-1]:
            return v / np.linalg.norm(v)


def random_target(variant: Protocol, rng: np.random.Generator) -> TargetSpec:
    variant = Protocol(variant)
    mags = _sorted_unit(rng, variant.branch_count)
    phases = rng.uniform(0.0, 2 * np.pi, variant.phase_count)
    return TargetSpec(variant, tuple(mags.tolist()), tuple(phases.tolist()))


def random_channel(variant: Protocol, rng: np.random.Generator) -> ChannelSpec:
    variant = Protocol(variant)
    n = variant.channel_kind.size
    while True:
        mags = _sorted_unit(rng, n)
        if variant is not Protocol.REAL_2Q or mags[0] * mags[3] <= mags[1] * mags[2]:
            break
    if variant.is_real:
        return ChannelSpec(variant.channel_kind, tuple(mags.tolist()))
    phases = rng.uniform(0.0, 2 * np.pi, n)
    return ChannelSpec(variant.channel_kind, tuple((mags * np.exp(1j * phases)).tolist()))


def random_case(variant: Protocol, rng: np.random.Generator) -> tuple[TargetSpec, ChannelSpec]:
    return random_target(variant, rng), random_channel(variant, rng)
