import dataclasses
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from froblift.deformation_stack import (
    OdAlgebra,
    SchemaError,
    StackData,
    StackValidationError,
    dump_stack,
    height_one_stack,
    load_stack,
    parse_stack,
    serialize_stack,
    truncate_stack,
    validate_all,
    validate_category_axioms,
    validate_frobenius_classifiers,
    validate_p_power_structure,
)
from froblift.local_algebra import LocalRing, PrecisionContext
from helpers import perturb, perturbation_catalogue


def failing_names(S):
    return [c.name for rep in validate_all(S) for c in rep.failures()]


@pytest.mark.parametrize("p", [2, 3, 5, 7])
@pytest.mark.parametrize("M", [1, 2, 5, 8])
def test_height_one_instance_passes_everything(p, M):
    S = height_one_stack(p, M, max_degree=3)
    assert all(rep.ok for rep in validate_all(S))


def test_height_one_trivial_identities():
    S = height_one_stack(5, 3)
    rep = validate_p_power_structure(S)
    assert next(c for c in rep.checks if c.name == "q s_h = id").passed
    assert validate_frobenius_classifiers(S).ok


def test_round_trip():
    S = height_one_stack(3, 4)
    assert load_stack(dump_stack(S)) == S
    assert parse_stack(serialize_stack(S)) == S


def test_truncation_matches_direct_construction():
    assert truncate_stack(height_one_stack(3, 6), 4) == height_one_stack(3, 4)
    with pytest.raises(SchemaError):
        parse_stack(serialize_stack(height_one_stack(3, 4)), precision=5)


def test_corrupted_comultiplication_is_rejected():
    doc = serialize_stack(height_one_stack(3, 4, max_degree=3))
    idx = next(i for i, b in enumerate(doc["nabla"]) if (b["d"], b["e"]) == (1, 1))
    bad = perturb(doc, ("nabla", idx, "coords", 0, 0), "3")
    with pytest.raises(StackValidationError) as info:
        load_stack(bad)
    assert "nabla_1,1" in info.value.axiom


def test_corrupted_coassociativity_is_reported():
    doc = serialize_stack(height_one_stack(3, 4, max_degree=3))
    idx = next(i for i, b in enumerate(doc["nabla"]) if (b["d"], b["e"]) == (1, 2))
    assert "coassociativity (1,1,1)" in failing_names(parse_stack(perturb(doc, ("nabla", idx, "coords", 0, 0), "3")))


@pytest.mark.parametrize("field", ["nu", "psi", "mult", "max_ideal"])
def test_missing_fields_are_schema_errors(field):
    doc = serialize_stack(height_one_stack(3, 4))
    del doc["degrees"][1][field]
    with pytest.raises(SchemaError):
        load_stack(doc)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other/1"),
    lambda d: d.update(p=4),
    lambda d: d.pop("q"),
    lambda d: d["degrees"].pop(),
    lambda d: d["nabla"].pop(),
    lambda d: d["degrees"][0].update(mult=[["1"]]),
    lambda d: d["degrees"][0].update(nu=["x"]),
])
def test_malformed_documents(mutate):
    doc = serialize_stack(height_one_stack(3, 4))
    mutate(doc)
    with pytest.raises(SchemaError):
        parse_stack(json.dumps(doc))


def test_wrong_psi_on_o0_breaks_congruence():
    doc = serialize_stack(height_one_stack(3, 4))
    # psi_{O_0}(e1) = 1 + 1: the congruence psi(x) = x^p mod m_0 fails
    names = failing_names(parse_stack(perturb(doc, ("degrees", 0, "psi", 0, 0), "1")))
    assert "psi_O_0(x) = x^3 mod m_0" in names


def test_psi_o_shifted_by_p_breaks_q_t_h():
    doc = serialize_stack(height_one_stack(3, 4))
    names = failing_names(parse_stack(perturb(doc, ("degrees", 0, "psi", 0, 0), "3")))
    assert "q t_h = psi_O" in names


def test_classifier_perturbations():
    doc = serialize_stack(height_one_stack(3, 4))
    zero = json.loads(json.dumps(doc))
    zero["degrees"][1]["nu"] = ["0"]
    rep = validate_frobenius_classifiers(parse_stack(zero))
    assert rep.first_failure.name == "nu_1 is surjective onto O/p (nu(1) = 1)"
    shifted = perturb(doc, ("degrees", 1, "nu", 0), "1")
    assert "nu_1 t_1 is the p^1-th power map" in [
        c.name for c in validate_frobenius_classifiers(parse_stack(shifted)).failures()
    ]


def test_q_perturbation_breaks_q_s_h():
    doc = serialize_stack(height_one_stack(3, 4))
    rep = validate_p_power_structure(parse_stack(perturb(doc, ("q", 0), "3")))
    assert rep.first_failure.name == "q s_h = id"


def test_nonassociative_multiplication_reports_triple():
    S = height_one_stack(3, 4)
    O = S.O

    def vec(*v):
        return tuple(O(x) for x in v)

    # e2*e2 = e3, e2*e3 = 0, e3*e3 = e1: (e2 e2) e3 = e1 but e2 (e2 e3) = 0
    mult = ((vec(1, 0, 0), vec(0, 1, 0), vec(0, 0, 1)),
            (vec(0, 1, 0), vec(0, 0, 1), vec(0, 0, 0)),
            (vec(0, 0, 1), vec(0, 0, 0), vec(1, 0, 0)))
    alg = OdAlgebra(1, O, ("e1", "e2", "e3"), mult, (), (vec(3, 0, 0), vec(0, 1, 0), vec(0, 0, 1)))
    T = dataclasses.replace(S, algebras=(S.algebras[0], alg, S.algebras[2]))
    check = next(c for c in validate_category_axioms(T).checks if c.name == "O_1: associativity")
    assert check.passed is False and check.detail == "fails at triple (e2, e2, e3)"


def frobenius_type_stack(p=2, M=6, D=4):
    """Height 2, O_d = O, t_d(u) = u^(p^d), psi_O(u) = u^(p^2).

    Consistent except that psi_O is not an automorphism.
    """
    O = LocalRing(PrecisionContext(p, 2, M))
    u, one = O.var("u1"), (O.one,)
    algebras = tuple(
        OdAlgebra(d, O, ("e1",), ((one,),), ((u ** (p**d),),), ((O(p),), (u,)))
        for d in range(D + 1)
    )
    nabla = {(d, e): ((O.one,),) for d in range(D + 1) for e in range(D + 1 - d)}
    return StackData(O.ctx, D, (u**4,), algebras, nabla, tuple(one for _ in algebras), one,
                     tuple((one,) for _ in algebras))


def test_height_two_toy_data_exercises_u_variables():
    S = frobenius_type_stack()
    assert failing_names(S) == ["psi_O is invertible"]
    doc = serialize_stack(S)
    assert parse_stack(doc) == S
    # t_1(u) = u^2 shifted to u^2 + 1 leaves m_1 and breaks several axioms
    names = failing_names(parse_stack(perturb(doc, ("degrees", 1, "t", 0, 0), "1")))
    assert "t_1(m) lies in m_1" in names


def test_every_catalogued_perturbation_fails():
    doc = serialize_stack(height_one_stack(3, 4, max_degree=3))
    catalogue = perturbation_catalogue(doc, 3)
    assert len(catalogue) >= 20
    for label, bad in catalogue:
        assert failing_names(parse_stack(bad)), label


@given(st.sampled_from([2, 3, 5]), st.integers(1, 7))
def test_validators_stable_under_refinement(p, M):
    hi = height_one_stack(p, M + 1)
    lo = truncate_stack(hi, M)
    assert all(r.ok for r in validate_all(hi)) and all(r.ok for r in validate_all(lo))


@given(st.sampled_from([2, 3, 5]), st.integers(2, 6), st.integers(0, 40))
def test_perturbation_detected_at_every_precision(p, M, which):
    doc = serialize_stack(height_one_stack(p, M, max_degree=3))
    catalogue = perturbation_catalogue(doc, p)
    label, bad = catalogue[which % len(catalogue)]
    assert failing_names(parse_stack(bad)), label
