"""Unique lifts of O-algebra maps to maps of quasicoherent sheaves, and the
cofreeness solver  Hom_QCoh(R, O) -> Hom_kappa(R/mR, kappa).

Maps of sheaves are computed in QCoh only.  For targets whose ring is
p-torsion free (such as O itself) these agree with maps of algebras over
the power-operation monad, which is why the solver may work entirely with
comodule data.  Sources are polynomial sheaves; quotients are not handled.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .frobenius_lift import NotPerfectError, frobenius_lift_hom
from .local_algebra import (
    AlgebraMap,
    Element,
    apply_map,
    madic_order,
    maps_equal_mod,
    render,
)
from .qcoh import (
    CongruenceError,
    SheafOfRings,
    extend_comodule,
    sheaf_as_frobenius_ring,
    unit_sheaf,
)


class LiftConsistencyError(RuntimeError):
    """The equivariant lift is not compatible with the comodule maps.

    Valid inputs cannot produce this; it signals inconsistent stack or sheaf data.
    """


class EnumerationBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class KappaPoint:
    """A kappa-algebra map R/mR -> F_p: one residue per generator."""

    values: tuple[int, ...]

    def __str__(self):
        return "(" + ", ".join(map(str, self.values)) + ")"


def _push(sheaf_S: SheafOfRings, mu: AlgebraMap, coords):
    return tuple(apply_map(mu, c) for c in coords)


def sheaf_map_defects(Rs: SheafOfRings, Ss: SheafOfRings, mu: AlgebraMap) -> list[tuple[int, str]]:
    """(d, generator) pairs where (id (x) mu) nabla_{R,d} != nabla_{S,d} mu."""
    if mu.source != Rs.R or mu.target != Ss.R:
        raise ValueError("mu must map the ring of Rs to the ring of Ss")
    D = min(Rs.max_degree, Ss.max_degree)
    out = []
    for d in range(1, D + 1):
        for name, v in zip(Rs.R.var_names, Rs.R.gens()):
            alpha = _push(Ss, mu, extend_comodule(Rs, d, v).coords)
            beta = extend_comodule(Ss, d, apply_map(mu, v)).coords
            if alpha != beta:
                out.append((d, name))
    return out


def is_sheaf_map(Rs: SheafOfRings, Ss: SheafOfRings, mu: AlgebraMap) -> bool:
    return not sheaf_map_defects(Rs, Ss, mu)


def lift_to_sheaf_map(Rs: SheafOfRings, Ss: SheafOfRings, mu: AlgebraMap) -> AlgebraMap:
    """The unique map of sheaves congruent to the O-algebra map mu mod mS.

    Stage 1 makes mu equivariant for the Adams operations by Frobenius
    lifting; stage 2 checks it commutes with every nabla_{d}.
    """
    R_obj = sheaf_as_frobenius_ring(Rs)
    S_obj = sheaf_as_frobenius_ring(Ss)
    if not S_obj.perfect:
        raise NotPerfectError("the target sheaf must be perfect (psi_S invertible)")
    lifted = frobenius_lift_hom(mu, R_obj, S_obj).underlying
    defects = sheaf_map_defects(Rs, Ss, lifted)
    if defects:
        d, name = defects[0]
        raise LiftConsistencyError(
            f"alpha != beta in degree {d} at generator {name}: stack or sheaf data are inconsistent"
        )
    return lifted


def _set_level_lift(Rs: SheafOfRings, target, values, noise: list[Element] | None = None) -> AlgebraMap:
    images = {}
    for i, (g, a) in enumerate(zip(Rs.generators, values)):
        img = target.from_int(a)
        if noise is not None:
            img = img + noise[i]
        images[g] = img
    return AlgebraMap.over_base(Rs.R, target, images)


def solve_cofree(Rs: SheafOfRings, pt: KappaPoint, target: SheafOfRings | None = None) -> AlgebraMap:
    """The unique sheaf map R -> O reducing to the kappa-point ``pt``."""
    Os = target if target is not None else unit_sheaf(Rs.stack)
    if len(pt.values) != len(Rs.generators):
        raise ValueError(f"point needs {len(Rs.generators)} values")
    p = Rs.stack.ctx.p
    if any(not 0 <= a < p for a in pt.values):
        raise ValueError(f"kappa-point values must lie in 0..{p - 1}")
    return lift_to_sheaf_map(Rs, Os, _set_level_lift(Rs, Os.R, pt.values))


def enumerate_kappa_points(Rs: SheafOfRings, budget: int = 4096) -> list[KappaPoint]:
    p, n = Rs.stack.ctx.p, len(Rs.generators)
    if p**n > budget:
        raise EnumerationBudgetError(f"{p}^{n} points exceed the budget of {budget}")
    return [KappaPoint(v) for v in itertools.product(range(p), repeat=n)]


def reduces_to(mu: AlgebraMap, pt: KappaPoint, Rs: SheafOfRings) -> bool:
    for g, a in zip(Rs.generators, pt.values):
        if madic_order(mu.image(g) - a) < 1:
            return False
    return True


def random_ideal_element(ring, rng: random.Random) -> Element:
    """A random element of the maximal ideal of ``ring``."""
    p, M = ring.p, ring.M
    x = ring.from_int(p * rng.randrange(p ** max(M - 1, 0)))
    for u in ring.u_names:
        x = x + ring.var(u) * rng.randrange(p ** max(M - 1, 0))
    return x


@dataclass
class PointResult:
    point: KappaPoint
    lifted: AlgebraMap | None
    checks: dict = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.lifted is not None and all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "point": list(self.point.values),
            "images": None if self.lifted is None else {
                g: render(self.lifted.image(g)) for g in self.lifted.source.generators
            },
            "checks": dict(self.checks),
            "error": self.error,
        }


@dataclass
class BijectionReport:
    results: list[PointResult]
    distinct: bool

    @property
    def n_points(self) -> int:
        return len(self.results)

    @property
    def n_maps(self) -> int:
        return sum(r.lifted is not None for r in self.results)

    @property
    def ok(self) -> bool:
        return self.distinct and all(r.ok for r in self.results) and self.n_maps == self.n_points

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "points": self.n_points,
            "lifted_maps": self.n_maps,
            "distinct": self.distinct,
            "results": [r.to_dict() for r in self.results],
        }


def cofreeness_bijection_check(Rs: SheafOfRings, relifts: int = 3, seed: int = 0,
                               budget: int = 4096) -> BijectionReport:
    """Lift every kappa-point and check the lifts form a bijection."""
    rng = random.Random(seed)
    Os = unit_sheaf(Rs.stack)
    M = Rs.stack.ctx.M
    results = []
    for pt in enumerate_kappa_points(Rs, budget):
        try:
            mu = solve_cofree(Rs, pt, Os)
        except (CongruenceError, NotPerfectError, LiftConsistencyError, ArithmeticError) as exc:
            results.append(PointResult(pt, None, {}, str(exc)))
            continue
        checks = {
            "sheaf map": is_sheaf_map(Rs, Os, mu),
            "reduces to point": reduces_to(mu, pt, Rs),
        }
        independent = True
        for _ in range(relifts):
            noise = [random_ideal_element(Os.R, rng) for _ in Rs.generators]
            other = lift_to_sheaf_map(Rs, Os, _set_level_lift(Rs, Os.R, pt.values, noise))
            independent &= maps_equal_mod(mu, other, M)
        checks["lift independent"] = independent
        results.append(PointResult(pt, mu, checks))
    maps = [r.lifted for r in results if r.lifted is not None]
    distinct = all(
        not maps_equal_mod(a, b, 1) for a, b in itertools.combinations(maps, 2)
    )
    return BijectionReport(results, distinct)
