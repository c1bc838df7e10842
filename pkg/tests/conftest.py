import sys
from importlib.resources import files
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stormgrid.grid import apply_extensions, load_case, parse_extensions, parse_matpower_case  # noqa: E402

DATA = Path(str(files("stormgrid") / "data"))
GOLDEN = Path(__file__).parent / "golden"

TWO_BUS = """mpc.baseMVA = 100;
mpc.bus = [
	1	3	0;
	2	1	80;
];
mpc.gen = [
	1	0	0	0	0	1	100	1	100	0;
];
mpc.branch = [
	1	2	0	0.1	0	50;
];
"""


def make_grid(case_text: str, ext: str = '{"horizon": 1}'):
    return apply_extensions(parse_matpower_case(case_text), parse_extensions(ext))


@pytest.fixture(scope="session")
def case30():
    return apply_extensions(load_case(DATA / "case30.m"), parse_extensions((DATA / "case30_ext.json").read_text()))


@pytest.fixture
def two_bus():
    return make_grid(TWO_BUS)


@pytest.fixture(scope="session")
def corpus():
    from stormgrid.synthdata import generate_dataset, split

    data = generate_dataset(300, 300, seed=42)
    return (data, *split(data, 0.8, seed=42))


@pytest.fixture(scope="session")
def sweep(corpus):
    from stormgrid.svm import grid_search

    _, tr, va = corpus
    return grid_search(tr, va)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
