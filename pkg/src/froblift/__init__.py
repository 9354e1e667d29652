"""Frobenius lifting, deformation-stack comodule algebras, Adams operations and
the cofreeness solver, in exact arithmetic at finite m-adic precision."""
from .local_algebra import (
    AlgebraMap,
    Element,
    LocalRing,
    PolyAlgebra,
    PrecisionContext,
    apply_map,
    coerce,
    compose_maps,
    invert_automorphism,
    madic_order,
    maps_equal_mod,
    render,
    ring_arith,
)
from .frobenius_lift import (
    FrobeniusMorphism,
    FrobeniusRing,
    MonomialIdeal,
    agreement_order,
    check_frobenius_structure,
    conjugate_step,
    frobenius_lift_hom,
    teichmuller_lift,
)
from .deformation_stack import (
    StackData,
    height_one_stack,
    load_stack,
    serialize_stack,
    validate_all,
    validate_category_axioms,
    validate_frobenius_classifiers,
    validate_p_power_structure,
)
from .qcoh import (
    SheafOfRings,
    TensorElement,
    adams_operation,
    adams_property_suite,
    check_frobenius_congruence,
    extend_comodule,
    parse_sheaf,
    sheaf_as_frobenius_ring,
    unit_sheaf,
    validate_comodule_algebra,
)
from .cofreeness import (
    KappaPoint,
    cofreeness_bijection_check,
    enumerate_kappa_points,
    is_sheaf_map,
    lift_to_sheaf_map,
    solve_cofree,
)

__version__ = "0.1.0"
