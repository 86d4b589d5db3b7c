import numpy as np
import pytest

from lagreach.geometry import HPolytope, VPolytope
from lagreach.linsys import DoubleIntegrator, TargetTube, stock_system

DI_INPUT = HPolytope.box([-0.1], [0.1])


def random_vpolytope(rng, n=2, points=8, spread=1.0, center=None) -> VPolytope:
    """Hull of uniform points; always full-dimensional for points > n."""
    c = np.zeros(n) if center is None else np.asarray(center, float)
    X = c + spread * rng.uniform(-1, 1, size=(points, n))
    return VPolytope(X).normalize()


def random_hpolytope(rng, n=2, facets=10, radius=1.0) -> HPolytope:
    """Random normals with offsets in [0.5, 1.5] * radius: bounded and contains a ball at 0."""
    for _ in range(100):
        A = rng.standard_normal((facets, n))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        b = radius * rng.uniform(0.5, 1.5, size=facets)
        P = HPolytope(A, b)
        if P.is_bounded():
            return P
    raise RuntimeError("could not draw a bounded polytope")


def unit_directions(rng, count, n):
    D = rng.standard_normal((count, n))
    return D / np.linalg.norm(D, axis=1, keepdims=True)


def h_support(P, D):
    H = P.to_h()
    return np.array([H.support(d) for d in D])


def v_support(P, D):
    return np.max(D @ P.to_v().vertices.T, axis=1)


def sample_box(P, count, rng, pad=0.2):
    lo, hi = P.bounding_box()
    w = hi - lo
    return rng.uniform(lo - pad * w - 1e-3, hi + pad * w + 1e-3, size=(count, len(lo)))


def di_system(horizon=5, T=0.25):
    return stock_system(DoubleIntegrator(T), DI_INPUT, horizon)


def viability_tube(horizon=5, n=2, half=1.0):
    return TargetTube.constant(HPolytope.box([-half] * n, [half] * n), horizon)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


# --- acceptance summary -----------------------------------------------------

ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        lines[number] = f"[{number:2d}] {status}  {title}" + (f"  ({detail})" if detail else "")
        print(lines[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
