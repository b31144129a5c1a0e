import numpy as np
from hypothesis import strategies as st

from lumisec.channel import PathSet
from lumisec.scene import build_scenario


def random_pathset(rng: np.random.Generator, n: int) -> PathSet:
    """Gains ~1e-6..1e-5, LoS delay 5-15 ns, NLoS excess delay 0-20 ns."""
    los_delay = rng.uniform(5e-9, 15e-9)
    return PathSet(rng.uniform(1e-6, 2e-5), los_delay,
                   rng.uniform(0, 5e-6, size=n), los_delay + rng.uniform(0, 20e-9, size=n))


coords = st.tuples(st.floats(0.2, 4.8), st.floats(0.2, 4.8), st.floats(0.3, 1.2))


@st.composite
def small_scenarios(draw, max_eves=3, min_eves=1):
    """Random receiver layouts in the canonical room with a 2x2 or 3x2 IRS."""
    k = draw(st.integers(min_eves, max_eves))
    pts = draw(st.lists(coords, min_size=k + 1, max_size=k + 1,
                        unique_by=lambda p: (round(p[0], 3), round(p[1], 3), round(p[2], 3))))
    rows = draw(st.integers(2, 3))
    power = draw(st.floats(1.0, 10.0))
    cfg = {"bob": list(pts[0]), "eves": [list(p) for p in pts[1:]],
           "irs": {"rows": rows, "cols": 2, "pitch_h": 0.6, "pitch_v": 0.6},
           "system": {"optical_power_w": power}}
    return build_scenario(cfg)
