import math
import os
import sys

import numpy as np
from hypothesis import assume, settings
from hypothesis import strategies as st

from rspsim.protocol import ChannelSpec, Protocol, TargetSpec

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def _unit_sorted(n, min_ratio=1e-3):
    return (st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=n, max_size=n)
            .map(sorted)
            .filter(lambda xs: xs[0] >= min_ratio * xs[-1])
            .map(lambda xs: tuple(x / math.sqrt(math.fsum(v * v for v in xs)) for x in xs))
            .filter(lambda xs: all(xs[i] <= xs[i + 1] for i in range(n - 1))))


angles = st.floats(min_value=-math.pi, max_value=math.pi)


@st.composite
def cases(draw, variant):
    variant = Protocol(variant)
    n = variant.branch_count
    mags = draw(_unit_sorted(n))
    phases = tuple(draw(angles) for _ in range(variant.phase_count)) if not variant.is_real else ()
    target = TargetSpec(variant, mags, phases)
    ch = draw(_unit_sorted(n))
    if variant is Protocol.REAL_2Q:
        assume(ch[0] * ch[3] <= ch[1] * ch[2])
    kind = variant.channel_kind
    if variant.is_real:
        channel = ChannelSpec(kind, ch)
    else:
        ph = [draw(angles) for _ in range(n)]
        channel = ChannelSpec.from_polar(kind, list(zip(ch, ph)))
    return target, channel


any_case = st.sampled_from(list(Protocol)).flatmap(cases)


def states(n_qubits):
    dim = 1 << n_qubits
    comp = st.floats(min_value=-1, max_value=1)
    return (st.lists(st.tuples(comp, comp), min_size=dim, max_size=dim)
            .map(lambda zs: np.array([complex(a, b) for a, b in zs]))
            .filter(lambda v: np.linalg.norm(v) > 1e-3)
            .map(lambda v: v / np.linalg.norm(v)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
