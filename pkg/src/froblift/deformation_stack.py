"""Representing data (O, O_d, s_d, t_d, nabla_{d,e}, nu_d, q, psi_{O_d}) of the
deformation category as finite presentations, with validators.

Conventions
-----------
* O_d is free over O via s_d with basis e_1, ..., e_r (e_1 the unit).  An
  element of O_d is a tuple of r elements of O (its s_d-coordinates).
* O_d (x)_{s,O,t} O_e = sum_i e_i (x) O_e.  An element is a tuple over i of
  O_e-vectors; the flat coordinate array used in files is indexed
  i * rank_e + j.  Scalars of O act through s_e on the right factor.
* nabla_{d,e} is O-linear (s_{d+e} on the source, s_e on the target) and is
  stored as its matrix on the basis of O_{d+e}.  Its composition
  conventions are nabla s_{d+e} = 1 (x) s_e and nabla t_{d+e} = t_d (x) 1.
* nu_d and q are s-linear, stored as their values on the basis.  psi_{O_d}
  is semilinear over psi_O (psi s_d = s_d psi_O) and stored as the images of
  the basis; psi_O itself is stored as the images of the u-variables.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

from .local_algebra import (
    AlgebraMap,
    Element,
    LocalRing,
    PrecisionContext,
    apply_map,
    coerce,
    divisible_by_p,
    invert_automorphism,
    madic_order,
    reduce_mod_p,
    render,
)
from .report import Report

Vector = tuple[Element, ...]

FORMAT = "froblift-stack/1"


class SchemaError(ValueError):
    pass


class StackValidationError(ValueError):
    def __init__(self, axiom: str, detail: str):
        super().__init__(f"{axiom}: {detail}" if detail else axiom)
        self.axiom = axiom
        self.detail = detail


@dataclass(frozen=True)
class OdAlgebra:
    """The ring O_d as a free O-module with structure constants."""

    d: int
    base: LocalRing
    labels: tuple[str, ...]
    mult: tuple[tuple[Vector, ...], ...]  # mult[i][j] = e_i * e_j
    t_images: tuple[Vector, ...]  # t_d(u_l) for each u-variable
    max_ideal: tuple[Vector, ...]

    @property
    def rank(self) -> int:
        return len(self.labels)

    def basis(self, i: int) -> Vector:
        O = self.base
        return tuple(O.one if k == i else O.zero for k in range(self.rank))

    @property
    def one(self) -> Vector:
        return self.basis(0)

    @property
    def zero(self) -> Vector:
        return (self.base.zero,) * self.rank

    def scalar(self, c: Element) -> Vector:
        """s_d(c)."""
        return (c,) + (self.base.zero,) * (self.rank - 1)

    def add(self, a: Vector, b: Vector) -> Vector:
        return tuple(x + y for x, y in zip(a, b))

    def scale(self, c: Element, a: Vector) -> Vector:
        return tuple(c * x for x in a)

    def mul(self, a: Vector, b: Vector) -> Vector:
        r = self.rank
        acc = [self.base.zero] * r
        for i, ai in enumerate(a):
            if ai.is_zero():
                continue
            for j, bj in enumerate(b):
                if bj.is_zero():
                    continue
                c = ai * bj
                for k, ck in enumerate(self.mult[i][j]):
                    if not ck.is_zero():
                        acc[k] = acc[k] + c * ck
        return tuple(acc)

    def power(self, a: Vector, n: int) -> Vector:
        result, base = self.one, a
        while n:
            if n & 1:
                result = self.mul(result, base)
            n >>= 1
            if n:
                base = self.mul(base, base)
        return result

    def t(self, c: Element) -> Vector:
        """t_d(c) for c in O."""
        acc = self.zero
        cache: dict = {}
        for exps, coef in c.terms.items():
            term = self.one
            for l, k in enumerate(exps):
                if k:
                    key = (l, k)
                    if key not in cache:
                        cache[key] = self.power(self.t_images[l], k)
                    term = self.mul(term, cache[key])
            acc = self.add(acc, self.scale(self.base.from_int(coef), term))
        return acc

    @cached_property
    def residue(self) -> "_Residue":
        return _Residue(self)


class _Residue:
    """The quotient O_d -> O_d / m_d computed over F_p = O / m.

    Works in A = O_d / s_d(m) = F_p^rank; m_d is assumed to contain s_d(m).
    """

    def __init__(self, alg: OdAlgebra):
        self.alg = alg
        p = alg.base.p
        self.p = p
        vecs = []
        for g in alg.max_ideal:
            for i in range(alg.rank):
                vecs.append(self._mod_m(alg.mul(g, alg.basis(i))))
        self.rows = self._echelon(vecs)
        self.dimension = alg.rank - len(self.rows)

    def _mod_m(self, a: Vector) -> list[int]:
        return [x.constant_term() % self.p for x in a]

    def _echelon(self, vecs):
        p = self.p
        rows: list[tuple[int, list[int]]] = []
        for v in vecs:
            v = self._reduce(v, rows)
            piv = next((i for i, x in enumerate(v) if x), None)
            if piv is None:
                continue
            inv = pow(v[piv], -1, p)
            v = [x * inv % p for x in v]
            rows.append((piv, v))
        return rows

    def _reduce(self, v, rows):
        v = list(v)
        for piv, row in rows:
            if v[piv]:
                f = v[piv]
                v = [(a - f * b) % self.p for a, b in zip(v, row)]
        return v

    def __call__(self, a: Vector) -> int:
        """Image of a in the residue field (requires dimension 1)."""
        if self.dimension != 1:
            raise ValueError("residue ring is not a field with p elements")
        red = self._reduce(self._mod_m(a), self.rows)
        unit = self._reduce(self._mod_m(self.alg.one), self.rows)
        k = next(i for i, x in enumerate(unit) if x)
        return red[k] * pow(unit[k], -1, self.p) % self.p

    def contains(self, a: Vector) -> bool:
        return not any(self._reduce(self._mod_m(a), self.rows))


@dataclass(frozen=True)
class StackData:
    ctx: PrecisionContext
    max_degree: int
    psi_u: tuple[Element, ...]  # psi_O on u-variables
    algebras: tuple[OdAlgebra, ...]
    nabla: dict  # (d, e) -> tuple over k of flat coordinate tuples
    nu: tuple[Vector, ...]  # nu[d][i] = nu_d(e_i) in O/p
    q: Vector  # q(e_i) for the basis of O_h
    psi_basis: tuple[tuple[Vector, ...], ...]  # psi_{O_d}(e_i)

    def __hash__(self):
        return hash((self.ctx, self.max_degree))

    @property
    def O(self) -> LocalRing:
        return self.algebras[0].base

    @property
    def h(self) -> int:
        return self.ctx.h

    def algebra(self, d: int) -> OdAlgebra:
        if not 0 <= d <= self.max_degree:
            raise IndexError(f"degree {d} outside 0..{self.max_degree}")
        return self.algebras[d]

    @cached_property
    def psi_O(self) -> AlgebraMap:
        return AlgebraMap(self.O, self.O, self.psi_u)

    # -- structure maps on elements -------------------------------------------

    def psi_Od(self, d: int, a: Vector) -> Vector:
        alg = self.algebra(d)
        acc = alg.zero
        for c, img in zip(a, self.psi_basis[d]):
            if not c.is_zero():
                acc = alg.add(acc, alg.scale(apply_map(self.psi_O, c), img))
        return acc

    def q_apply(self, a: Vector) -> Element:
        return sum((c * qi for c, qi in zip(a, self.q)), self.O.zero)

    def nu_apply(self, d: int, a: Vector) -> Element:
        return reduce_mod_p(sum((c * n for c, n in zip(a, self.nu[d])), self.O.zero))

    def nabla_apply(self, d: int, e: int, a: Vector) -> tuple[Vector, ...]:
        """nabla_{d,e}(a) as a tuple over i of O_e-vectors."""
        re_ = self.algebra(e).rank
        rd = self.algebra(d).rank
        mat = self.nabla[(d, e)]
        flat = [self.O.zero] * (rd * re_)
        for c, row in zip(a, mat):
            if c.is_zero():
                continue
            for idx, x in enumerate(row):
                if not x.is_zero():
                    flat[idx] = flat[idx] + c * x
        return tuple(tuple(flat[i * re_ : (i + 1) * re_]) for i in range(rd))

    def pure_tensor(self, d: int, e: int, x: Vector, y: Vector) -> tuple[Vector, ...]:
        """x (x) y in O_d (x)_{s,O,t} O_e."""
        Oe = self.algebra(e)
        return tuple(Oe.mul(Oe.t(xi), y) for xi in x)

    def tensor_mul(self, d: int, e: int, a, b):
        Od, Oe = self.algebra(d), self.algebra(e)
        acc = [Oe.zero] * Od.rank
        for i, ai in enumerate(a):
            for k, bk in enumerate(b):
                prod = Oe.mul(ai, bk)
                if all(x.is_zero() for x in prod):
                    continue
                for m, c in enumerate(Od.mult[i][k]):
                    if not c.is_zero():
                        acc[m] = Oe.add(acc[m], Oe.mul(Oe.t(c), prod))
        return tuple(acc)


# -- built-in height-one instance -----------------------------------------------


def height_one_stack(p: int, M: int, max_degree: int = 2) -> StackData:
    """Height 1: every O_d is Z_p and every structure map is the identity."""
    ctx = PrecisionContext(p, 1, M)
    O = LocalRing(ctx)
    one = (O.one,)
    algebras = tuple(
        OdAlgebra(d, O, ("e1",), ((one,),), (), ((O.from_int(p),),))
        for d in range(max_degree + 1)
    )
    nabla = {
        (d, e): ((O.one,),)
        for d in range(max_degree + 1)
        for e in range(max_degree + 1 - d)
    }
    return StackData(
        ctx=ctx,
        max_degree=max_degree,
        psi_u=(),
        algebras=algebras,
        nabla=nabla,
        nu=tuple(one for _ in algebras),
        q=one,
        psi_basis=tuple((one,) for _ in algebras),
    )


# -- validators ------------------------------------------------------------------


def _vec_str(v) -> str:
    return "[" + ", ".join(render(x) for x in v) + "]"


def validate_category_axioms(S: StackData) -> Report:
    """Ring structure of each O_d, counit/compatibility/coassociativity of
    nabla, invertibility of psi_O and the congruence psi_{O_d}(x) = x^(p^h)
    mod m_d."""
    rep = Report("category axioms")
    O = S.O
    D = S.max_degree
    q = S.ctx.p ** S.ctx.h
    for d, alg in enumerate(S.algebras):
        r = alg.rank
        lab = alg.labels
        bad = [lab[j] for j in range(r)
               if alg.mult[0][j] != alg.basis(j) or alg.mult[j][0] != alg.basis(j)]
        rep.add(f"O_{d}: e1 is the unit", not bad, f"fails at {bad[0]}" if bad else "")
        bad = [(lab[i], lab[j]) for i in range(r) for j in range(i + 1, r)
               if alg.mult[i][j] != alg.mult[j][i]]
        rep.add(f"O_{d}: commutativity", not bad,
                "fails at pair ({}, {})".format(*bad[0]) if bad else "")
        bad = []
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    lhs = alg.mul(alg.mult[i][j], alg.basis(k))
                    rhs = alg.mul(alg.basis(i), alg.mult[j][k])
                    if lhs != rhs:
                        bad.append((lab[i], lab[j], lab[k]))
        rep.add(f"O_{d}: associativity", not bad, "fails at triple ({}, {}, {})".format(*bad[0]) if bad else "")
        res = alg.residue
        rep.add(f"O_{d}/m_{d} has p elements", res.dimension == 1,
                f"residue dimension over F_p is {res.dimension}")
        if res.dimension == 1:
            bad = [n for n, t in zip(O.u_names, alg.t_images) if not res.contains(t)]
            rep.add(f"t_{d}(m) lies in m_{d}", not bad, f"t_{d}({bad[0]}) is not in m_{d}" if bad else "")
        ring_ok = alg.rank and S.psi_basis[d][0] == alg.one
        witness = "psi(e1) != e1" if not ring_ok else ""
        if ring_ok:
            for i in range(r):
                for j in range(r):
                    lhs = S.psi_Od(d, alg.mult[i][j])
                    rhs = alg.mul(S.psi_basis[d][i], S.psi_basis[d][j])
                    if lhs != rhs:
                        ring_ok, witness = False, f"fails on e{i + 1}*e{j + 1}"
                        break
                if not ring_ok:
                    break
        rep.add(f"psi_O_{d} is a ring map", bool(ring_ok), witness)
        bad = [n for n, t in zip(O.u_names, alg.t_images)
               if S.psi_Od(d, t) != alg.t(S.psi_u[O.u_names.index(n)])]
        rep.add(f"psi_O_{d} commutes with t_{d}", not bad, f"fails at {bad[0]}" if bad else "")
        if res.dimension == 1:
            gens = [(f"s_{d}({n})", alg.scalar(O.var(n))) for n in O.u_names]
            gens += [(f"e{i + 1}", alg.basis(i)) for i in range(r)]
            bad = []
            for name, g in gens:
                diff = alg.add(S.psi_Od(d, g), alg.scale(O.from_int(-1), alg.power(g, q)))
                if not res.contains(diff):
                    bad.append(name)
            rep.add(f"psi_O_{d}(x) = x^{q} mod m_{d}", not bad,
                    f"fails at generator {bad[0]}" if bad else "")
    try:
        invert_automorphism(S.psi_O)
        rep.add("psi_O is invertible", True)
    except ArithmeticError as exc:
        rep.add("psi_O is invertible", False, str(exc))

    for (d, e), mat in sorted(S.nabla.items()):
        Od, Oe, Ode = S.algebra(d), S.algebra(e), S.algebra(d + e)
        name = f"nabla_{d},{e}"
        if e == 0 or d == 0:
            ident = all(
                S.nabla_apply(d, e, Ode.basis(k)) == _counit_image(S, d, e, k)
                for k in range(Ode.rank)
            )
            rep.add(f"{name}: counit (identity coordinates)", ident)
        unit = S.nabla_apply(d, e, Ode.one) == S.pure_tensor(d, e, Od.one, Oe.one)
        rep.add(f"{name}: compatible with s_{d + e} (sends 1 to 1)", unit)
        bad = []
        for l, u in enumerate(O.u_names):
            lhs = S.nabla_apply(d, e, Ode.t_images[l])
            rhs = S.pure_tensor(d, e, Od.t_images[l], Oe.one)
            if lhs != rhs:
                bad.append(u)
        rep.add(f"{name}: compatible with t_{d + e}", not bad, f"fails at {bad[0]}" if bad else "")
        bad = []
        for i in range(Ode.rank):
            for j in range(i, Ode.rank):
                lhs = S.nabla_apply(d, e, Ode.mult[i][j])
                rhs = S.tensor_mul(d, e, S.nabla_apply(d, e, Ode.basis(i)),
                                   S.nabla_apply(d, e, Ode.basis(j)))
                if lhs != rhs:
                    bad.append((i + 1, j + 1))
        rep.add(f"{name}: ring map", not bad,
                "fails on basis pair (e{}, e{})".format(*bad[0]) if bad else "")

    for d in range(D + 1):
        for e in range(D + 1 - d):
            for f in range(D + 1 - d - e):
                if 0 in (d, e, f):
                    continue
                big = S.algebra(d + e + f)
                bad = [k for k in range(big.rank)
                       if _coassoc_left(S, d, e, f, big.basis(k))
                       != _coassoc_right(S, d, e, f, big.basis(k))]
                rep.add(f"coassociativity ({d},{e},{f})", not bad,
                        f"fails on basis element e{bad[0] + 1}" if bad else "")
    return rep


def _counit_image(S: StackData, d: int, e: int, k: int):
    if e == 0:
        # g_k (x) 1 in O_d (x) O_0
        return tuple((S.O.one if i == k else S.O.zero,) for i in range(S.algebra(d).rank))
    # 1 (x) g_k in O_0 (x) O_e
    return (S.algebra(e).basis(k),)


def _coassoc_left(S, d, e, f, g):
    """(nabla_{d,e} (x) id) nabla_{d+e,f}(g) as [i][j] -> O_f-vector."""
    Od, Oe, Of = S.algebra(d), S.algebra(e), S.algebra(f)
    outer = S.nabla_apply(d + e, f, g)  # over basis a of O_{d+e}: z_a in O_f
    acc = [[Of.zero for _ in range(Oe.rank)] for _ in range(Od.rank)]
    for a, z in enumerate(outer):
        if all(x.is_zero() for x in z):
            continue
        inner = S.nabla_apply(d, e, S.algebra(d + e).basis(a))
        for i, y in enumerate(inner):
            for j, c in enumerate(y):
                if not c.is_zero():
                    acc[i][j] = Of.add(acc[i][j], Of.mul(Of.t(c), z))
    return tuple(tuple(row) for row in acc)


def _coassoc_right(S, d, e, f, g):
    """(id (x) nabla_{e,f}) nabla_{d,e+f}(g)."""
    outer = S.nabla_apply(d, e + f, g)
    return tuple(S.nabla_apply(e, f, y) for y in outer)


def validate_frobenius_classifiers(S: StackData) -> Report:
    rep = Report("Frobenius classifiers")
    O = S.O
    p = S.ctx.p
    for d, alg in enumerate(S.algebras):
        nu = S.nu[d]
        rep.add(f"nu_{d} is surjective onto O/p (nu(1) = 1)",
                S.nu_apply(d, alg.one) == O.one)
        bad = []
        for i in range(alg.rank):
            for j in range(alg.rank):
                if S.nu_apply(d, alg.mult[i][j]) != reduce_mod_p(nu[i] * nu[j]):
                    bad.append((i, j))
        rep.add(f"nu_{d} is multiplicative", not bad, f"fails on e{bad[0][0] + 1}*e{bad[0][1] + 1}" if bad else "")
        gens = [("1", O.one)] + [(n, O.var(n)) for n in O.u_names]
        bad = [n for n, c in gens if S.nu_apply(d, alg.scalar(c)) != reduce_mod_p(c)]
        rep.add(f"nu_{d} s_{d} is the quotient map", not bad, f"fails at {bad[0]}" if bad else "")
        bad = [n for n, c in gens if S.nu_apply(d, alg.t(c)) != reduce_mod_p(c ** (p**d))]
        rep.add(f"nu_{d} t_{d} is the p^{d}-th power map", not bad, f"fails at {bad[0]}" if bad else "")
        res = alg.residue
        if res.dimension != 1:
            rep.add(f"nu_{d} refines the residue map", False, "O_d/m_d is not F_p")
            continue
        bad = [i for i in range(alg.rank)
               if S.nu_apply(d, alg.basis(i)).constant_term() % p != res(alg.basis(i))]
        rep.add(f"nu_{d} refines the residue map O_{d} -> O/m", not bad,
                f"fails at e{bad[0] + 1}" if bad else "")
    return rep


def validate_p_power_structure(S: StackData) -> Report:
    rep = Report("p-th power structure")
    h, D, O = S.h, S.max_degree, S.O
    if D < h:
        rep.add("degree data reaches h", False, f"max degree {D} < h = {h}")
        return rep
    Oh = S.algebra(h)
    rep.add("q s_h = id", S.q_apply(Oh.one) == O.one and all(
        S.q_apply(Oh.scalar(O.var(n))) == O.var(n) for n in O.u_names))
    bad = [(i, j) for i in range(Oh.rank) for j in range(Oh.rank)
           if S.q_apply(Oh.mult[i][j]) != S.q[i] * S.q[j]]
    rep.add("q is multiplicative", not bad, f"fails on e{bad[0][0] + 1}*e{bad[0][1] + 1}" if bad else "")
    gens = [("1", O.one, S.psi_basis[0][0][0])]
    gens += [(n, O.var(n), S.psi_u[l]) for l, n in enumerate(O.u_names)]
    bad = [n for n, c, target in gens if S.q_apply(Oh.t(c)) != target]
    rep.add("q t_h = psi_O", not bad, f"fails at {bad[0]}" if bad else "")
    for d in range(D - h + 1):
        Od, big = S.algebra(d), S.algebra(d + h)
        bad = []
        for k in range(big.rank):
            g = big.basis(k)
            lhs = Od.zero
            for i, y in enumerate(S.nabla_apply(d, h, g)):
                lhs = Od.add(lhs, Od.scale(S.q_apply(y), S.psi_basis[d][i]))
            rhs = Od.zero
            for i, z in enumerate(S.nabla_apply(h, d, g)):
                rhs = Od.add(rhs, Od.mul(Od.t(S.q[i]), z))
            if lhs != rhs:
                bad.append(k)
        rep.add(f"p-power naturality square at d={d}", not bad,
                f"fails on basis element e{bad[0] + 1}" if bad else "")
    return rep


def validate_all(S: StackData) -> list[Report]:
    return [validate_category_axioms(S), validate_frobenius_classifiers(S),
            validate_p_power_structure(S)]


# -- serialization ---------------------------------------------------------------


def serialize_stack(S: StackData) -> dict:
    rs = lambda v: [render(x) for x in v]  # noqa: E731
    degrees = []
    for d, alg in enumerate(S.algebras):
        degrees.append({
            "d": d,
            "rank": alg.rank,
            "basis": list(alg.labels),
            "mult": [[rs(alg.mult[i][j]) for j in range(alg.rank)] for i in range(alg.rank)],
            "t": [rs(t) for t in alg.t_images],
            "max_ideal": [rs(g) for g in alg.max_ideal],
            "nu": rs(S.nu[d]),
            "psi": [rs(v) for v in S.psi_basis[d]],
        })
    return {
        "format": FORMAT,
        "p": S.ctx.p,
        "h": S.ctx.h,
        "precision": S.ctx.M,
        "max_degree": S.max_degree,
        "psi_u": rs(S.psi_u),
        "degrees": degrees,
        "nabla": [
            {"d": d, "e": e, "coords": [rs(row) for row in mat]}
            for (d, e), mat in sorted(S.nabla.items())
        ],
        "q": rs(S.q),
    }


def dump_stack(S: StackData) -> str:
    return json.dumps(serialize_stack(S), indent=1)


def _need(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"missing field {key!r} in {where}")
    return doc[key]


def _parse_vec(O: LocalRing, raw, n: int, where: str) -> Vector:
    if not isinstance(raw, list) or len(raw) != n:
        raise SchemaError(f"{where}: expected a list of {n} elements")
    try:
        return tuple(O.parse(str(x)) for x in raw)
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def parse_stack(document: str | dict, precision: int | None = None) -> StackData:
    """Parse a stack document without running the validators."""
    doc = json.loads(document) if isinstance(document, str) else document
    if doc.get("format", FORMAT) != FORMAT:
        raise SchemaError(f"unknown format {doc.get('format')!r}")
    try:
        p, h = int(_need(doc, "p", "header")), int(_need(doc, "h", "header"))
        M, D = int(_need(doc, "precision", "header")), int(_need(doc, "max_degree", "header"))
        ctx = PrecisionContext(p, h, M)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad header: {exc}") from None
    if precision is not None:
        if precision > M:
            raise SchemaError(f"requested precision {precision} exceeds file precision {M}")
        ctx = ctx.with_precision(precision)
    O = LocalRing(ctx)
    psi_u = _parse_vec(O, _need(doc, "psi_u", "header"), h - 1, "psi_u")
    blocks = {}
    for blk in _need(doc, "degrees", "header"):
        blocks[int(_need(blk, "d", "degree block"))] = blk
    if sorted(blocks) != list(range(D + 1)):
        raise SchemaError(f"degree blocks must cover 0..{D}, got {sorted(blocks)}")
    algebras, nus, psis = [], [], []
    for d in range(D + 1):
        blk = blocks[d]
        where = f"degree {d}"
        r = int(_need(blk, "rank", where))
        labels = tuple(_need(blk, "basis", where))
        if len(labels) != r:
            raise SchemaError(f"{where}: {len(labels)} basis labels for rank {r}")
        mult_raw = _need(blk, "mult", where)
        if not isinstance(mult_raw, list) or len(mult_raw) != r:
            raise SchemaError(f"{where}: mult must be a {r}x{r}x{r} array")
        mult = tuple(
            tuple(_parse_vec(O, mult_raw[i][j], r, f"{where} mult[{i}][{j}]") for j in range(r))
            if isinstance(mult_raw[i], list) and len(mult_raw[i]) == r
            else _bad(f"{where}: mult row {i} has wrong length")
            for i in range(r)
        )
        t_raw = _need(blk, "t", where)
        if len(t_raw) != h - 1:
            raise SchemaError(f"{where}: need {h - 1} t-images")
        t_images = tuple(_parse_vec(O, v, r, f"{where} t") for v in t_raw)
        mx = tuple(_parse_vec(O, v, r, f"{where} max_ideal") for v in _need(blk, "max_ideal", where))
        nu = tuple(reduce_mod_p(x) for x in _parse_vec(O, _need(blk, "nu", where), r, f"{where} nu"))
        psi_raw = _need(blk, "psi", where)
        if not isinstance(psi_raw, list) or len(psi_raw) != r:
            raise SchemaError(f"{where}: psi must list images of {r} basis elements")
        psi = tuple(_parse_vec(O, v, r, f"{where} psi") for v in psi_raw)
        algebras.append(OdAlgebra(d, O, labels, mult, t_images, mx))
        nus.append(nu)
        psis.append(psi)
    nabla = {}
    for blk in _need(doc, "nabla", "header"):
        d, e = int(_need(blk, "d", "nabla block")), int(_need(blk, "e", "nabla block"))
        if d < 0 or e < 0 or d + e > D:
            raise SchemaError(f"nabla_{d},{e} out of range")
        rows = _need(blk, "coords", f"nabla_{d},{e}")
        big, width = algebras[d + e].rank, algebras[d].rank * algebras[e].rank
        if len(rows) != big:
            raise SchemaError(f"nabla_{d},{e}: need {big} rows")
        nabla[(d, e)] = tuple(_parse_vec(O, row, width, f"nabla_{d},{e}") for row in rows)
    missing = [(d, e) for d in range(D + 1) for e in range(D + 1 - d) if (d, e) not in nabla]
    if missing:
        raise SchemaError(f"missing nabla blocks {missing}")
    if D < h:
        raise SchemaError(f"max_degree {D} must be at least h = {h}")
    q = _parse_vec(O, _need(doc, "q", "header"), algebras[h].rank, "q")
    try:
        AlgebraMap(O, O, psi_u)
    except ValueError as exc:
        raise SchemaError(f"psi_u: {exc}") from None
    return StackData(ctx, D, psi_u, tuple(algebras), nabla, tuple(nus), q, tuple(psis))


def _bad(msg):
    raise SchemaError(msg)


def load_stack(document: str | dict, precision: int | None = None) -> StackData:
    """Parse a stack document and run every validator; fail on the first violation."""
    S = parse_stack(document, precision)
    for rep in validate_all(S):
        fail = rep.first_failure
        if fail is not None:
            raise StackValidationError(fail.name, fail.detail)
    return S


def truncate_stack(S: StackData, M: int) -> StackData:
    return parse_stack(serialize_stack(S), precision=M)
