import os

# keep BLAS single-threaded so acceptance timings are what they claim to be
for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import pytest

import stripbie as sb


@pytest.fixture(scope="session")
def ex1_solution():
    """Ex1 Case I at r=0.1, moderate resolution; shared by read-only tests."""
    return sb.solve_scene(sb.example_scene("Ex1-CaseI", r=0.1), 256)


@pytest.fixture(scope="session")
def symmetric_conductor_solution():
    scene = sb.StripScene((sb.Inclusion(sb.InclusionKind.CONDUCTOR, sb.Ellipse(0.5j, 0.2, 0.1)),))
    return sb.solve_scene(scene, 256)


@pytest.fixture(scope="session")
def empty_solution():
    return sb.solve_scene(sb.StripScene(()), 64)
