from fractions import Fraction

import hypothesis.strategies as st
from hypothesis import settings

from aqtlab.injection import BoundParams, InjectionPattern, PacketSpec
from aqtlab.topology import Route

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@st.composite
def small_patterns(draw, max_n=6, max_h=8, max_count=4, sizes=None):
    n = draw(st.integers(1, max_n))
    H = draw(st.integers(0, max_h))
    items = []
    for t in range(H + 1):
        for o in range(1, n + 1):
            c = draw(st.integers(0, max_count)) if draw(st.booleans()) else 0
            for _ in range(c):
                size = Fraction(1) if sizes is None else draw(st.sampled_from(sizes))
                items.append(PacketSpec(t, Route(o), size))
    return InjectionPattern(H, tuple(items), n)


fractions_small = st.builds(Fraction, st.integers(0, 8), st.integers(1, 4))


@st.composite
def bound_params(draw, n):
    rho = draw(fractions_small)
    sigma = draw(fractions_small)
    beta = {i: draw(fractions_small) for i in range(1, n + 1)}
    return BoundParams(rho, sigma, beta)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
