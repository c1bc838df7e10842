import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, TWO_BUS, make_grid
from parser_corpus import MUTATIONS
from stormgrid.grid import (
    Bus,
    CaseParseError,
    CaseValidationError,
    Generator,
    GridCase,
    Line,
    OutageScenario,
    apply_extensions,
    incidence,
    load_case,
    parse_extensions,
    parse_matpower_case,
    parse_scenarios,
)

CASE30_LINES = (DATA / "case30.m").read_text().splitlines()


def test_two_bus_case():
    g = parse_matpower_case(TWO_BUS)
    assert (len(g.buses), len(g.lines), len(g.generators)) == (2, 1, 1)
    assert g.bus(2).base_load == 80 and g.generators[0].p_max == 100
    assert g.lines[0].reactance == 0.1 and g.lines[0].pl_max == 50


def test_case30_structure(case30):
    assert (len(case30.buses), len(case30.lines), len(case30.generators)) == (30, 41, 6)
    assert case30.total_load() == pytest.approx(189.2)
    assert [g.bus for g in case30.generators] == [1, 2, 22, 27, 23, 13]
    assert case30.horizon == 24 and set(case30.load_profile) == {1.0}
    assert all(b.location is not None for b in case30.buses)
    assert all(0 <= c <= 100 for b in case30.buses for c in b.location)


def test_comments_whitespace_and_extra_columns():
    text = """% header comment
mpc.baseMVA = 100; % trailing
mpc.bus = [1 3 0 0 0 0 1 1 0 135 1 1.05 0.95 ;   % extra columns tolerated
           2 1 10,5,0,0,1,1,0,135,1,1.05,0.95];
mpc.gen = [ 1 0 0 0 0 1 100 1 50 0 0 0 ];
mpc.branch = [
  1 2 0.01 0.2 0 0 ;  % rateA 0 -> unlimited
];
"""
    g = parse_matpower_case(text)
    assert g.bus(2).base_load == 10
    assert g.lines[0].pl_max == pytest.approx(10 * 10)


def test_unknown_bus_named():
    bad = TWO_BUS.replace("1\t2\t0\t0.1", "1\t99\t0\t0.1")
    with pytest.raises(CaseValidationError, match="99"):
        parse_matpower_case(bad)


@pytest.mark.parametrize("name,mutate,line", MUTATIONS, ids=[m[0] for m in MUTATIONS])
def test_corrupted_case_rejected_with_position(name, mutate, line):
    text = "\n".join(mutate(CASE30_LINES))
    with pytest.raises(CaseParseError) as err:
        parse_matpower_case(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


def test_corpus_size():
    assert len(MUTATIONS) == 20


def test_missing_block_is_positioned():
    text = TWO_BUS.split("mpc.branch")[0]
    with pytest.raises(CaseParseError) as err:
        parse_matpower_case(text)
    assert err.value.line > 0 and "mpc.branch" in str(err.value)


def test_generator_status_is_commitment():
    text = TWO_BUS.replace("1\t100\t1\t100\t0;", "1\t100\t0\t100\t0;")
    g = parse_matpower_case(text)
    assert set(g.generators[0].committed) == {0}


# -- extensions --------------------------------------------------------------

def test_empty_extensions_defaults():
    g = apply_extensions(parse_matpower_case(TWO_BUS), parse_extensions("{}"))
    assert all(b.voll == 1000 for b in g.buses)
    assert g.generators[0].delta == g.generators[0].p_max
    assert g.horizon == 24 and g.load_profile == (1.0,) * 24


def test_extension_fields():
    ext = {
        "voll": {"2": 5000},
        "layout": {"1": [0, 0], "2": [10, 0]},
        "delta": {"1": 20},
        "profile": [1.0, 0.5, 0.8],
        "line_geometry": {"1": [[0, 0], [5, 5], [10, 0]]},
        "committed": {"1": [1, 0, 1]},
    }
    g = make_grid(TWO_BUS, json.dumps(ext))
    assert g.bus(2).voll == 5000 and g.bus(1).voll == 1000
    assert g.generators[0].delta == 20 and g.generators[0].committed == (1, 0, 1)
    assert g.horizon == 3 and g.demand(2, 1) == 40
    assert g.line_geometry(g.lines[0]) == ((0, 0), (5, 5), (10, 0))


def test_default_line_geometry_is_straight():
    g = make_grid(TWO_BUS, '{"layout": {"1": [0, 0], "2": [3, 4]}}')
    assert g.line_geometry(g.lines[0]) == ((0, 0), (3, 4))
    h = make_grid(TWO_BUS)
    with pytest.raises(CaseValidationError, match="no layout"):
        h.line_geometry(h.lines[0])


@pytest.mark.parametrize(
    "ext,match",
    [
        ('{"delta": {"1": -1}}', "delta must be >= 0"),
        ('{"voll": {"2": -5}}', "voll"),
        ('{"voll": {"7": 5}}', "unknown bus 7"),
        ('{"delta": {"4": 5}}', "unknown generator 4"),
        ('{"line_geometry": {"9": [[0, 0], [1, 1]]}}', "unknown line 9"),
        ('{"layout": {"8": [0, 0]}}', "unknown bus 8"),
        ('{"colour": 1}', "unknown extension keys"),
        ('{"profile": [1, -1]}', "profile"),
        ('{"line_geometry": {"1": [[0, 0]]}}', "two points"),
        ("[1, 2]", "JSON object"),
    ],
)
def test_extension_errors(ext, match):
    with pytest.raises(CaseParseError, match=match):
        apply_extensions(parse_matpower_case(TWO_BUS), parse_extensions(ext))


def test_extension_json_error_positioned():
    with pytest.raises(CaseParseError) as err:
        parse_extensions('{\n"voll": {\n"2": 5000,\n}\n}')
    assert err.value.line == 4


# -- model invariants ----------------------------------------------------------

def test_grid_invariants():
    b = (Bus(1, 0), Bus(2, 10))
    with pytest.raises(CaseValidationError):
        GridCase((Bus(1), Bus(1)), (), ())
    with pytest.raises(CaseValidationError):
        GridCase(b, (Generator(1, 3, 0, 10, 10),), ())
    with pytest.raises(CaseValidationError):
        GridCase(b, (Generator(1, 1, 5, 1, 1),), ())
    with pytest.raises(CaseValidationError):
        GridCase(b, (), (Line(1, 1, 1, 0.1, 10),))
    with pytest.raises(CaseValidationError):
        GridCase(b, (), (Line(1, 1, 2, -0.1, 10),))
    with pytest.raises(CaseValidationError):
        GridCase(b, (), (), horizon=2, load_profile=(1.0,))
    with pytest.raises(CaseValidationError):
        GridCase((Bus(1, float("inf")),), (), ())


def test_json_round_trip(case30):
    back = GridCase.from_json(case30.to_json())
    assert back == case30


def test_incidence_definition(two_bus, case30):
    a = incidence(two_bus)
    assert a.tolist() == [[1.0, -1.0]]
    A = incidence(case30)
    assert A.shape == (41, 30)
    assert np.all((A != 0).sum(1) == 2)
    assert np.all(A.sum(1) == 0)
    assert np.all((A == 1).sum(1) == 1) and np.all((A == -1).sum(1) == 1)


def test_reference_bus(case30):
    assert case30.reference_bus() == 1
    text = TWO_BUS.replace("1\t100\t1\t100\t0;", "1\t100\t0\t100\t0;")
    g = make_grid(text)
    with pytest.raises(CaseValidationError):
        g.reference_bus()


# -- scenarios --------------------------------------------------------------------

def test_scenario_file(case30):
    text = json.dumps({"scenarios": [{"s": 2, "lines_out": [3]}, {"s": 1, "gens_out": [2], "lines_out": []}]})
    scs = parse_scenarios(text, case30)
    assert [s.s for s in scs] == [0, 1, 2]
    assert scs[1].gen_state[2] == (0,) * 24 and scs[2].line_state[3] == (0,) * 24
    assert scs[0].gens_out() == [] and scs[2].lines_out() == [3]
    with pytest.raises(CaseValidationError, match="unknown line"):
        parse_scenarios('[{"s": 1, "lines_out": [77]}]', case30)
    with pytest.raises(CaseValidationError, match="duplicate"):
        parse_scenarios('[{"s": 1}, {"s": 1}]', case30)
    with pytest.raises(ValueError):
        OutageScenario.constant(case30, 0, lines_out=[1])


def test_incomplete_scenario_detected(case30):
    sc = OutageScenario(1, {g.id: (1,) * 24 for g in case30.generators}, {})
    with pytest.raises(CaseValidationError, match="missing"):
        sc.check_complete(case30)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 500, allow_nan=False), min_size=2, max_size=6), st.integers(1, 5))
def test_round_trip_property(loads, horizon):
    n = len(loads)
    buses = tuple(Bus(k + 1, v, 1000.0 + k, (float(k), 2.0 * k)) for k, v in enumerate(loads))
    lines = tuple(Line(k, k, k + 1, 0.1 * k, 50.0) for k in range(1, n))
    gens = (Generator(1, 1, 0.0, 100.0, 40.0, (1,) * horizon),)
    g = GridCase(buses, gens, lines, 100.0, horizon, (1.0,) * horizon)
    assert GridCase.from_json(g.to_json()) == g
