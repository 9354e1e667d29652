"""Rings with a lift of p^h-power Frobenius and the conjugation-contraction
algorithm producing Frobenius-equivariant maps and Teichmueller lifts."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .local_algebra import (
    INF,
    AlgebraMap,
    ConvergenceError,
    Element,
    PolyAlgebra,
    Ring,
    RingMismatchError,
    apply_map,
    coerce,
    compose_maps,
    invert_automorphism,
    madic_order,
    p_valuation,
)
from .report import Report


class HypothesisError(ValueError):
    """Inputs violate the hypotheses of Frobenius lifting."""


class NotPerfectError(HypothesisError):
    pass


def maximal_ideal(ring: Ring) -> tuple[Element, ...]:
    """Generators (p, u_1, ..., u_{h-1}) of m extended to ``ring``."""
    return (ring.from_int(ring.p),) + tuple(ring.var(u) for u in ring.u_names)


def _monomial_vector(g: Element) -> tuple[int, ...]:
    if len(g.terms) != 1:
        raise ValueError(f"ideal generator {g} is not a monomial")
    (exps, c), = g.terms.items()
    return (p_valuation(c, g.ring.p),) + exps


def _m_vectors(ring: Ring) -> set[tuple[int, ...]]:
    return {_monomial_vector(g) for g in maximal_ideal(ring) if not g.is_zero()}


@dataclass(frozen=True)
class MonomialIdeal:
    """Ideal generated by monomials p^a * u^b * x^c, required to contain m.

    Containing m makes membership in I^r well defined modulo m^M.
    """

    ring: Ring
    generators: tuple[Element, ...]
    _vectors: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        vecs = []
        for g in gens:
            if g.ring != self.ring:
                raise RingMismatchError(f"ideal generator {g} not in {self.ring}")
            if not g.is_zero():  # zero at precision M, e.g. p when M = 1
                vecs.append(_monomial_vector(g))
        object.__setattr__(self, "_vectors", tuple(vecs))
        if not all(self._term_order(v) >= 1 for v in _m_vectors(self.ring)):
            raise ValueError("ideal must contain the maximal ideal (p, u_1, ...)")

    @property
    def is_maximal_extension(self) -> bool:
        """True when the ideal is exactly m * ring."""
        n_u = self.ring.n_u
        if not _m_vectors(self.ring) <= set(self._vectors):
            return False
        # any extra generator must already lie in m
        return all(v[0] + sum(v[1 : 1 + n_u]) >= 1 for v in self._vectors)

    def _term_order(self, vec: tuple[int, ...]) -> int | float:
        """Largest r with the monomial vec in I^r."""
        vectors = self._vectors
        cap = self.ring.M
        if any(all(x == 0 for x in v) for v in vectors):
            return INF  # unit ideal

        @lru_cache(maxsize=None)
        def best(rem: tuple[int, ...], start: int) -> int:
            out = 0
            for i in range(start, len(vectors)):
                v = vectors[i]
                if all(a >= b for a, b in zip(rem, v)):
                    nxt = tuple(a - b for a, b in zip(rem, v))
                    out = max(out, 1 + best(nxt, i))
                    if out >= cap:
                        return cap
            return out

        return best(vec, 0)

    def order(self, x: Element) -> int | float:
        """I-adic order of x, capped at the working precision M."""
        M = self.ring.M
        if x.is_zero():
            return M
        if self.is_maximal_extension and len(self._vectors) == len(_m_vectors(self.ring)):
            return min(madic_order(x), M)
        p = self.ring.p
        best = M
        for exps, c in x.terms.items():
            best = min(best, self._term_order((p_valuation(c, p),) + exps))
            if best == 0:
                break
        return best

    def contains(self, x: Element) -> bool:
        return self.order(x) >= 1


@dataclass(frozen=True)
class FrobeniusRing:
    """An object (R, I_R, psi_R) of the category of rings with a lift of
    p^h-power Frobenius."""

    carrier: Ring
    ideal: MonomialIdeal
    psi: AlgebraMap
    complete: bool = True
    perfect: bool = False

    def __post_init__(self):
        if self.ideal.ring != self.carrier:
            raise RingMismatchError("ideal lives in a different ring")
        if self.psi.source != self.carrier or self.psi.target != self.carrier:
            raise RingMismatchError("psi must be an endomorphism of the carrier")

    @classmethod
    def with_maximal_ideal(cls, carrier: Ring, psi: AlgebraMap, **flags) -> "FrobeniusRing":
        return cls(carrier, MonomialIdeal(carrier, maximal_ideal(carrier)), psi, **flags)

    @property
    def frobenius_power(self) -> int:
        return self.carrier.p ** self.carrier.ctx.h


@dataclass(frozen=True)
class FrobeniusMorphism:
    underlying: AlgebraMap
    source: FrobeniusRing
    target: FrobeniusRing

    @property
    def images(self):
        return self.underlying.images


def check_frobenius_structure(F: FrobeniusRing) -> Report:
    """Verify p in I and psi(v) = v^(p^h) mod I on every variable.

    Generators suffice: the elements satisfying the congruence form a subring,
    because p in I makes p^h-powering additive modulo I.
    """
    rep = Report("Frobenius-lift structure")
    ring = F.carrier
    rep.add("p lies in the ideal", F.ideal.contains(ring.from_int(ring.p)))
    q = F.frobenius_power
    for name, v, img in zip(ring.var_names, ring.gens(), F.psi.images):
        ok = F.ideal.contains(img - v**q)
        rep.add(
            f"psi(x) = x^{q} mod I at generator {name}",
            ok,
            "" if ok else f"psi({name}) - {name}^{q} = {img - v**q} not in I",
        )
    if F.perfect:
        try:
            inv = _inverse(F.psi)
        except ArithmeticError as exc:
            rep.add("psi is invertible", False, str(exc))
        else:
            rep.add("psi is invertible", True)
            stable = all(F.ideal.contains(apply_map(f, g))
                         for f in (F.psi, inv) for g in F.ideal.generators)
            rep.add("psi(I) = I", stable)
    return rep


@lru_cache(maxsize=256)
def _inverse(psi: AlgebraMap) -> AlgebraMap:
    return invert_automorphism(psi)


def conjugate_step(mu: AlgebraMap, R: FrobeniusRing, S: FrobeniusRing) -> AlgebraMap:
    """mu' = psi_S^{-1} . mu . psi_R."""
    if not S.perfect:
        raise NotPerfectError("target must be perfect to conjugate by psi_S^-1")
    return compose_maps(_inverse(S.psi), compose_maps(mu, R.psi))


def agreement_order(mu1: AlgebraMap, mu2: AlgebraMap, S: FrobeniusRing) -> int:
    """Largest r <= M with mu1 = mu2 mod I_S^r on every variable."""
    if mu1.source != mu2.source or mu1.target != mu2.target:
        raise RingMismatchError("maps have different source or target")
    if mu1.target != S.carrier:
        raise RingMismatchError("maps do not land in S")
    M = S.carrier.M
    return int(min((S.ideal.order(a - b) for a, b in zip(mu1.images, mu2.images)), default=M))


def base_part(x: Element) -> Element:
    """x viewed in the local ring O; x must not involve polynomial generators."""
    return coerce(x, x.ring.base)


def _check_lifting_hypotheses(mu: AlgebraMap, R: FrobeniusRing, S: FrobeniusRing) -> None:
    if mu.source != R.carrier or mu.target != S.carrier:
        raise RingMismatchError("mu must map the carrier of R to the carrier of S")
    if not R.ideal.is_maximal_extension:
        raise HypothesisError("I_R must be generated by the image of m")
    if not S.ideal.is_maximal_extension:
        raise HypothesisError("I_S must be m*S (the only completeness realized by truncation)")
    if not (S.complete and S.perfect):
        raise NotPerfectError("target must be complete and perfect")
    for name in R.carrier.u_names:
        if mu.image(name) != S.carrier.var(name):
            raise HypothesisError(f"mu is not an O-algebra map: {name} -> {mu.image(name)}")
        try:
            same = base_part(R.psi.image(name)) == base_part(S.psi.image(name))
        except (RingMismatchError, ValueError):
            same = False
        if not same:
            raise HypothesisError(
                f"psi_R and psi_S disagree on {name}: the structure maps from O "
                "are not Frobenius-compatible"
            )


def frobenius_lift_hom(mu: AlgebraMap, R: FrobeniusRing, S: FrobeniusRing) -> FrobeniusMorphism:
    """Unique psi-equivariant O-algebra map congruent to mu modulo I_S.

    Iterates mu -> psi_S^{-1} mu psi_R; each step gains one power of I_S, so
    the iterates are stationary after at most M steps.
    """
    _check_lifting_hypotheses(mu, R, S)
    M = S.carrier.M
    current = mu
    for _ in range(M + 1):
        nxt = conjugate_step(current, R, S)
        if nxt == current:
            return FrobeniusMorphism(current, R, S)
        current = nxt
    raise ConvergenceError(
        f"conjugation did not stabilize within {M + 1} steps; input structure is invalid"
    )


def teichmuller_lift(S: FrobeniusRing, a) -> Element:
    """The unique lift of the residue ``a`` with psi_S(lift) = lift^(p^h).

    Lifts x -> a' along Z_p[x] with psi(x) = x^(p^h); any integer or element of
    S representing the residue may be passed.
    """
    if not (S.complete and S.perfect):
        raise NotPerfectError("Teichmueller lifts need a complete perfect target")
    ring = S.carrier
    base = ring.base
    R_ring = PolyAlgebra(base, ("x",))
    q = S.frobenius_power
    u_imgs = [coerce(base_part(S.psi.image(u)), R_ring) for u in ring.u_names]
    psi_R = AlgebraMap(R_ring, R_ring, tuple(u_imgs) + (R_ring.var("x") ** q,))
    R = FrobeniusRing.with_maximal_ideal(R_ring, psi_R)
    mu = AlgebraMap.over_base(R_ring, ring, {"x": ring(a)})
    return frobenius_lift_hom(mu, R, S).underlying.image("x")


def is_equivariant(mu: AlgebraMap, R: FrobeniusRing, S: FrobeniusRing) -> bool:
    return compose_maps(mu, R.psi) == compose_maps(S.psi, mu)
