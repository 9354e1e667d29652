"""Shared constructors for tests and acceptance runs."""
import copy
import random

from froblift.frobenius_lift import FrobeniusRing, MonomialIdeal
from froblift.local_algebra import AlgebraMap, LocalRing, PolyAlgebra, PrecisionContext, coerce


def local(p, h, M):
    return LocalRing(PrecisionContext(p, h, M))


def perfect_base(p, h, M, psi_u=None):
    """(O, m, psi_O) with psi_O given on the u-variables (identity by default)."""
    O = local(p, h, M)
    psi = AlgebraMap.identity(O) if psi_u is None else AlgebraMap(O, O, tuple(O(y) for y in psi_u))
    return FrobeniusRing.with_maximal_ideal(O, psi, perfect=True)


def poly_object(S: FrobeniusRing, names, images) -> FrobeniusRing:
    """(O[x...], m, psi) with psi(u) = psi_S(u) and psi(x) from ``images``."""
    O = S.carrier
    R = PolyAlgebra(O, tuple(names))
    u_imgs = tuple(coerce(S.psi.image(u), R) for u in O.u_names)
    x_imgs = tuple(R(images[n]) for n in names)
    return FrobeniusRing.with_maximal_ideal(R, AlgebraMap(R, R, u_imgs + x_imgs))


def random_base_element(O, rng: random.Random, terms=4):
    """Random element of O with u-degree below the precision."""
    x = O.from_int(rng.randrange(O.p**O.M))
    for _ in range(terms):
        exps = tuple(rng.randrange(O.M) for _ in O.u_names)
        x = x + O.element({exps: rng.randrange(O.p**O.M)})
    return x


def random_ideal_element(O, rng: random.Random, terms=4):
    p = O.p
    x = p * random_base_element(O, rng, terms)
    for u in O.u_names:
        x = x + O.var(u) * random_base_element(O, rng, terms)
    return x


def random_automorphism_u(O, rng: random.Random):
    """psi_O(u) = a*u + p*b + (higher terms), a a unit."""
    out = []
    for u in O.u_names:
        a = rng.randrange(1, O.p)
        y = a * O.var(u) + O.p * rng.randrange(O.p**O.M) + O.var(u) ** 2 * random_base_element(O, rng, 2)
        y = y + O.p * O.var(u) * rng.randrange(O.p**O.M)
        out.append(y)
    return out


def random_frobenius_poly(R, rng: random.Random, q: int, x: str, degree=3):
    """x^q + (element of m R) of bounded x-degree."""
    O = R.base
    X = R.var(x)
    out = X**q
    for k in range(degree + 1):
        out = out + coerce(random_ideal_element(O, rng, 2), R) * X**k
    return out




# -- single-coordinate perturbations of a serialized stack --------------------


def stack_coordinates(doc: dict):
    """Yield (label, getter-path) for every ring-element coordinate."""
    for blk in doc["degrees"]:
        d = blk["d"]
        for i, row in enumerate(blk["mult"]):
            for j, vec in enumerate(row):
                for k, _ in enumerate(vec):
                    yield f"mult d={d} e{i + 1}*e{j + 1}[{k}]", ("degrees", d, "mult", i, j, k)
        for g, vec in enumerate(blk["max_ideal"]):
            for k, _ in enumerate(vec):
                yield f"max_ideal d={d} gen {g}[{k}]", ("degrees", d, "max_ideal", g, k)
        for k, _ in enumerate(blk["nu"]):
            yield f"nu d={d}[{k}]", ("degrees", d, "nu", k)
        for i, vec in enumerate(blk["psi"]):
            for k, _ in enumerate(vec):
                yield f"psi d={d} e{i + 1}[{k}]", ("degrees", d, "psi", i, k)
        for l, vec in enumerate(blk["t"]):
            for k, _ in enumerate(vec):
                yield f"t d={d} u{l + 1}[{k}]", ("degrees", d, "t", l, k)
    for n, blk in enumerate(doc["nabla"]):
        for r, row in enumerate(blk["coords"]):
            for k, _ in enumerate(row):
                yield f"nabla {blk['d']},{blk['e']} row {r}[{k}]", ("nabla", n, "coords", r, k)
    for k, _ in enumerate(doc["q"]):
        yield f"q[{k}]", ("q", k)
    for l, _ in enumerate(doc["psi_u"]):
        yield f"psi_u u{l + 1}", ("psi_u", l)


def perturb(doc: dict, path, delta: str) -> dict:
    out = copy.deepcopy(doc)
    node = out
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = f"({node[path[-1]]}) + ({delta})"
    return out


def perturbation_catalogue(doc: dict, p: int):
    """Every coordinate shifted by p, plus selected ones shifted by 1.

    Residue-level data (nu, generators of m_d) is shifted by 1: adding p there
    gives an equivalent presentation, not an error.
    """
    out = []
    for label, path in stack_coordinates(doc):
        residue_level = path[2] in ("nu", "max_ideal") if path[0] == "degrees" else False
        deltas = ("1",) if residue_level else (str(p), "1")
        for delta in deltas:
            out.append((f"{label} + {delta}", perturb(doc, path, delta)))
    return out
