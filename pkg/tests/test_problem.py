import math

import numpy as np
import pytest

from lame_spectra.config import BUILTINS, describe_builtins, list_builtins, load_config, parse_config
from lame_spectra.errors import AdmissibilityError, ConfigError, DegenerateFormError
from lame_spectra.mesh import build_disc_mesh, build_unit_square_mesh, tag_boundary
from lame_spectra.problem import (
    Kind,
    LameCoefficients,
    PerturbationSpec,
    ProblemSpec,
    factor_threshold,
    validate,
    weight_distance,
)


def _square(rule=None):
    m = build_unit_square_mesh(4)
    return m if rule is None else m.with_partition(tag_boundary(m, rule))


def test_condition_flags():
    p = ProblemSpec(_square(lambda x: x[:, 1] < 1e-12), Kind.D2, LameCoefficients(1.0, 0.0))
    rep = validate(p)
    assert rep.conditions == {"S_nonempty": True, "a00_positive": False, "b00_positive": False}
    assert rep.inner_product


def test_degenerate_without_any_condition():
    p = ProblemSpec(build_disc_mesh(12), Kind.D3, LameCoefficients(1.0, 0.0))
    with pytest.raises(DegenerateFormError):
        validate(p)


def test_a00_alone_makes_inner_product():
    p = ProblemSpec(build_disc_mesh(12), Kind.D3, LameCoefficients(1.0, 0.0), perturbation=PerturbationSpec(a00=1.0))
    assert validate(p).conditions["a00_positive"]


@pytest.mark.parametrize("kind,lam", [(Kind.D1, -0.1), (Kind.D2, -2.5)])
def test_kind_admissibility(kind, lam):
    p = ProblemSpec(_square(lambda x: x[:, 1] < 1e-12), kind, LameCoefficients(2.0, lam))
    with pytest.raises(AdmissibilityError):
        validate(p)


def test_kappa_bound():
    p = ProblemSpec(_square(lambda x: x[:, 1] < 1e-12), Kind.D3, LameCoefficients(0.3, 0.0, kappa=0.5))
    with pytest.raises(AdmissibilityError):
        validate(p)


def test_negative_b00_rejected():
    p = ProblemSpec(build_disc_mesh(12), Kind.D3, LameCoefficients(1.0, 0.0), perturbation=PerturbationSpec(a00=1.0, b00=-1.0))
    with pytest.raises(AdmissibilityError):
        validate(p)


def test_factor_thresholds():
    assert factor_threshold(Kind.D1) == pytest.approx(1.0)
    assert factor_threshold(Kind.D2) == pytest.approx(1.0)
    assert factor_threshold(Kind.D3) == pytest.approx(math.sin(math.pi / 4))
    assert factor_threshold(Kind.D1, 3) == pytest.approx(math.sin(math.pi / 3))


def test_distance_weight_vanishes_at_y():
    m = _square(lambda x: x[:, 1] < 1e-12)
    w = weight_distance(m, gamma=0.5)
    y = m.vertices[m.partition.y_vertices]
    assert np.allclose(w.rho(y), 0.0)
    assert np.all(w.rho(m.vertices) <= 1.0 + 1e-12)
    # finite-difference check of the analytic gradient away from Y
    x = np.array([[0.3, 0.6]])
    e = 1e-6
    fd = [(w.rho(x + e * d) - w.rho(x - e * d))[0] / (2 * e) for d in np.eye(2)]
    assert np.allclose(w.grad_rho(x)[0], fd, atol=1e-6)


def test_builtin_registry():
    assert list_builtins() == ["ex_d1", "ex_d2", "ex_d3", "example1", "example2"]
    text = describe_builtins()
    assert len(text.splitlines()) == 5
    assert "ex_d1: kind=D1" in text


@pytest.mark.parametrize("name", list(BUILTINS))
def test_builtins_validate(name):
    p = load_config(name)
    validate(p)
    assert len(p.config_hash) == 64


def test_builtin_kinds():
    assert load_config("ex_d1").kind is Kind.D1
    assert load_config("ex_d2").kind is Kind.D2
    assert load_config("ex_d3").kind is Kind.D3
    assert np.allclose(load_config("ex_d2").perturbation.d_tau, [[0, 0.1], [-0.1, 0]])


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("[domain]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[nonsense]\n")


def test_matrix_entry_count():
    with pytest.raises(ConfigError):
        parse_config("[perturbation]\na00 = 1, 2, 3\n")
    p = parse_config("[factorization]\nkind = D2\n[perturbation]\na1 = 1,0,0,0,0,0,0,1\n")
    assert p.perturbation.a1.shape == (2, 4)


def test_refine_changes_hash():
    a = load_config("ex_d1")
    b = load_config("ex_d1", refine_extra=1)
    assert a.config_hash != b.config_hash
    assert b.mesh.n_triangles == 4 * a.mesh.n_triangles
