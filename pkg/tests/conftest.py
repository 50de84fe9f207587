import importlib.resources as resources

import pytest

from gridflex import case_from_dict, load_case


def data_path(name: str) -> str:
    return str(resources.files("gridflex") / "data" / name)


def triangle_tie_dict(**overrides):
    """Equal-reactance triangle in area A, one tie to a single-bus area B.

    Injections: +1.0 at bus 1 (reference), +0.5 at bus 2; the 1.5 pu
    load at bus 4 pulls everything through the tie at bus 3.
    """
    raw = {
        "name": "triangle-tie",
        "areas": ["A", "B"],
        "reference_bus": 1,
        "buses": [
            {"id": 1, "area_id": "A", "load_pu": 0.0},
            {"id": 2, "area_id": "A", "load_pu": 0.0},
            {"id": 3, "area_id": "A", "load_pu": 0.0},
            {"id": 4, "area_id": "B", "load_pu": 1.5},
        ],
        "lines": [
            {"id": "1-2", "from_bus": 1, "to_bus": 2,
             "reactance_pu": 0.1, "flow_limit_pu": 10.0},
            {"id": "1-3", "from_bus": 1, "to_bus": 3,
             "reactance_pu": 0.1, "flow_limit_pu": 10.0},
            {"id": "2-3", "from_bus": 2, "to_bus": 3,
             "reactance_pu": 0.1, "flow_limit_pu": 10.0},
            {"id": "3-4", "from_bus": 3, "to_bus": 4,
             "reactance_pu": 0.1, "flow_limit_pu": 10.0},
        ],
        "generators": [
            {"id": "g1", "bus": 1, "p_sched_pu": 1.0, "p_min_pu": 0.0,
             "p_max_pu": 2.0, "res_up_pu": 0.5, "res_dn_pu": 0.25},
            {"id": "g2", "bus": 2, "p_sched_pu": 0.5, "p_min_pu": 0.0,
             "p_max_pu": 2.0, "res_up_pu": 0.5, "res_dn_pu": 0.25},
        ],
    }
    raw.update(overrides)
    return raw


@pytest.fixture
def triangle_tie_case():
    return case_from_dict(triangle_tie_dict())


@pytest.fixture(scope="session")
def toy_case():
    return load_case(data_path("toy_hexagon.json"))


@pytest.fixture(scope="session")
def rts_case():
    return load_case(data_path("rts96_2area.json"))
