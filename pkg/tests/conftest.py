from pathlib import Path

import pytest
from hypothesis import settings

from pllsurrogate import metamodel as mm
from pllsurrogate.optimize import DeConfig, OptProblem, de_run, grid_search
from pllsurrogate.oracle import OracleConfig
from pllsurrogate.pll import PllConfig, compare_views
from pllsurrogate.scenario import default_metamodel, default_views

DATA = Path(__file__).parent / "data"

# property suites draw at least 100 randomized cases
settings.register_profile("default", max_examples=100, deadline=None, derandomize=True)
settings.load_profile("default")

# Reference coefficients and their hand-evaluated responses at (20 um, 10 um, 0.5 V):
# frequency terms 2.113e9 - 6.428e7 + 1.3824e7 + 6.869e7 - 2.042e7 - 2.071e7
#                 + 1.7565e8 - 2.565e7 - 2.6655e7 + 0
REF_FREQ = 2.213449e9
REF_POWER = 6.153e-4


@pytest.fixture(scope="session")
def ref_model():
    return mm.load_csv(DATA / "reference_coeffs.csv")


@pytest.fixture(scope="session")
def oracle_cfg():
    return OracleConfig()


@pytest.fixture(scope="session")
def fitted(oracle_cfg):
    return default_metamodel(oracle_cfg)


@pytest.fixture(scope="session")
def views(oracle_cfg, fitted):
    return default_views(oracle_cfg, fitted.model)


@pytest.fixture(scope="session")
def default_comparison(views):
    """Reference comparison of the default scenario: oracle, linear, metamodel."""
    return compare_views(PllConfig(), [views["oracle"], views["linear"], views["metamodel"]])


@pytest.fixture(scope="session")
def pll_problem(views):
    return OptProblem(view=views["metamodel"])


@pytest.fixture(scope="session")
def de_metamodel(pll_problem):
    return de_run(pll_problem, DeConfig(seed=1))


@pytest.fixture(scope="session")
def grid_metamodel(pll_problem):
    return grid_search(pll_problem, 30)
