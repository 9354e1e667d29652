"""Quasicoherent sheaves of rings on the deformation stack: comodule algebras
(R, iota_R, nabla_{R,d}) with R a polynomial algebra over O.

An element of O_d (x)_{s,O,iota} R is a TensorElement: one coordinate in R per
basis element of O_d.  iota_R is the inclusion O -> R, so nabla_{R,d} is
determined by its values on the polynomial generators, and on O it is forced to
be t_d (x) 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .deformation_stack import SchemaError, StackData, height_one_stack, load_stack
from .frobenius_lift import FrobeniusRing, _inverse
from .local_algebra import (
    AlgebraMap,
    Element,
    PolyAlgebra,
    coerce,
    compose_maps,
    divisible_by_p,
    madic_order,
    render,
)
from .report import Report

SHEAF_FORMAT = "froblift-sheaf/1"


class SheafError(ValueError):
    pass


class CongruenceError(SheafError):
    pass


@dataclass(frozen=True)
class TensorElement:
    d: int
    coords: tuple[Element, ...]

    def __str__(self):
        return "[" + ", ".join(render(c) for c in self.coords) + "]"


@dataclass(frozen=True, eq=False)
class SheafOfRings:
    stack: StackData
    R: PolyAlgebra
    nabla: tuple[tuple[TensorElement, ...], ...]  # nabla[d-1][j] = nabla_{R,d}(x_j)

    def __post_init__(self):
        if self.R.base != self.stack.O:
            raise SheafError("R must be a polynomial algebra over the stack's O")
        D = self.stack.max_degree
        if len(self.nabla) != D:
            raise SheafError(f"need comodule maps for degrees 1..{D}")
        for d, imgs in enumerate(self.nabla, start=1):
            if len(imgs) != len(self.R.generators):
                raise SheafError(f"degree {d}: one image per generator required")
            r = self.stack.algebra(d).rank
            for t in imgs:
                if t.d != d or len(t.coords) != r or any(c.ring != self.R for c in t.coords):
                    raise SheafError(f"degree {d}: malformed tensor {t}")

    @property
    def generators(self) -> tuple[str, ...]:
        return self.R.generators

    @property
    def max_degree(self) -> int:
        return self.stack.max_degree

    @classmethod
    def iterated(cls, stack: StackData, R: PolyAlgebra, first: dict) -> "SheafOfRings":
        """Sheaf over a rank-one stack with identity nabla_{d,e}, where
        nabla_{R,d} is the d-fold iterate of the given nabla_{R,1}.

        At height 1 this is exactly a Z_p-algebra with a ring endomorphism.
        """
        for d in range(stack.max_degree + 1):
            if stack.algebra(d).rank != 1:
                raise SheafError("iteration needs every O_d to have rank one")
        one = stack.O.one
        if any(mat != ((one,),) for mat in stack.nabla.values()):
            raise SheafError("iteration needs nabla_{d,e} = id")
        f = AlgebraMap.over_base(R, R, {g: R(v) for g, v in first.items()})
        levels = []
        current = AlgebraMap.identity(R)
        for _ in range(stack.max_degree):
            current = _compose_over_t(stack, f, current)
            levels.append(tuple(TensorElement(len(levels) + 1, (y,))
                                for y in current.images[R.n_u:]))
        return cls(stack, R, tuple(levels))

    def tensor_ring(self, d: int) -> "_TensorRing":
        return _TensorRing(self, d)

    def with_precision(self, M: int) -> "SheafOfRings":
        from .deformation_stack import truncate_stack
        stack = truncate_stack(self.stack, M)
        R = PolyAlgebra(stack.O, self.R.generators)
        nabla = tuple(
            tuple(TensorElement(t.d, tuple(coerce(c, R) for c in t.coords)) for t in imgs)
            for imgs in self.nabla
        )
        return SheafOfRings(stack, R, nabla)


def _compose_over_t(stack, f: AlgebraMap, g: AlgebraMap) -> AlgebraMap:
    """Rank-one composite x -> (next level)(g(x)), with u-coefficients routed
    through t (which at rank one returns a single coordinate), i.e. the
    iterate nabla_{R,d+1} = (id (x) nabla_{R,1}) nabla_{R,d}."""
    R = f.source
    O = stack.O
    t1 = stack.algebra(1)
    u_imgs = tuple(coerce(t1.t(O.var(u))[0], R) for u in O.u_names)
    step = AlgebraMap(R, R, u_imgs + f.images[R.n_u:])
    return compose_maps(step, g)


def unit_sheaf(stack: StackData) -> SheafOfRings:
    """The unit object (O, id, t_d)."""
    R = PolyAlgebra(stack.O, ())
    return SheafOfRings(stack, R, tuple(() for _ in range(stack.max_degree)))


class _TensorRing:
    """O_d (x)_{s,O,iota} R."""

    def __init__(self, sheaf: SheafOfRings, d: int):
        self.sheaf, self.d = sheaf, d
        self.alg = sheaf.stack.algebra(d)
        R = sheaf.R
        self.R = R
        self.mult = [[tuple(coerce(c, R) for c in self.alg.mult[i][j])
                      for j in range(self.alg.rank)] for i in range(self.alg.rank)]

    @property
    def rank(self):
        return self.alg.rank

    def one(self) -> tuple[Element, ...]:
        R = self.R
        return (R.one,) + (R.zero,) * (self.rank - 1)

    def from_base_vector(self, v) -> tuple[Element, ...]:
        return tuple(coerce(c, self.R) for c in v)

    def add(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def scale(self, c: Element, a):
        return tuple(c * x for x in a)

    def mul(self, a, b):
        if self.rank == 1:
            return (a[0] * b[0] * self.mult[0][0][0],)
        acc = [self.R.zero] * self.rank
        for i, ai in enumerate(a):
            if ai.is_zero():
                continue
            for j, bj in enumerate(b):
                if bj.is_zero():
                    continue
                prod = ai * bj
                for k, c in enumerate(self.mult[i][j]):
                    if not c.is_zero():
                        acc[k] = acc[k] + c * prod
        return tuple(acc)

    def power(self, a, n: int):
        result, base = self.one(), a
        while n:
            if n & 1:
                result = self.mul(result, base)
            n >>= 1
            if n:
                base = self.mul(base, base)
        return result


def extend_comodule(sheaf: SheafOfRings, d: int, x: Element) -> TensorElement:
    """nabla_{R,d}(x) by multiplicative extension from the generators."""
    if not 0 <= d <= sheaf.max_degree:
        raise IndexError(f"degree {d} outside 0..{sheaf.max_degree}")
    R = sheaf.R
    if x.ring != R:
        raise SheafError(f"{x} is not an element of {R}")
    if d == 0:
        return TensorElement(0, (x,))
    T = sheaf.tensor_ring(d)
    alg = T.alg
    O = sheaf.stack.O
    images = [T.from_base_vector(alg.t(O.var(u))) for u in O.u_names]
    images += [t.coords for t in sheaf.nabla[d - 1]]
    powers = [[T.one(), img] for img in images]
    acc: list[dict] = [{} for _ in range(T.rank)]
    for exps, c in x.terms.items():
        term = None
        for v, k in enumerate(exps):
            if k:
                cached = powers[v]
                while len(cached) <= k:
                    cached.append(T.mul(cached[-1], images[v]))
                term = cached[k] if term is None else T.mul(term, cached[k])
        if term is None:
            term = T.one()
        for slot, coord in zip(acc, term):
            for key, a in coord.terms.items():
                slot[key] = slot.get(key, 0) + c * a
    return TensorElement(d, tuple(R.element(slot) for slot in acc))


def validate_comodule_algebra(sheaf: SheafOfRings) -> Report:
    rep = Report("comodule algebra")
    S, R = sheaf.stack, sheaf.R
    O = S.O
    D = sheaf.max_degree
    names = R.var_names
    for d in range(1, D + 1):
        alg = S.algebra(d)
        bad = []
        for u in O.u_names:
            lhs = extend_comodule(sheaf, d, R.var(u)).coords
            rhs = tuple(coerce(c, R) for c in alg.t(O.var(u)))
            if lhs != rhs:
                bad.append(u)
        rep.add(f"degree {d}: iota/t square", not bad, f"fails at {bad[0]}" if bad else "")
    for d in range(1, D + 1):
        for e in range(1, D + 1 - d):
            bad = []
            for name, v in zip(names, R.gens()):
                if _coassoc_lhs(sheaf, d, e, v) != _coassoc_rhs(sheaf, d, e, v):
                    bad.append(name)
            rep.add(f"coassociativity (d={d}, e={e})", not bad,
                    f"fails at generator {bad[0]}" if bad else "")
    return rep


def _coassoc_lhs(sheaf, d, e, v):
    """(id (x) nabla_{R,e}) nabla_{R,d}(v) as [i][j] -> R."""
    first = extend_comodule(sheaf, d, v).coords
    return tuple(extend_comodule(sheaf, e, r).coords for r in first)


def _coassoc_rhs(sheaf, d, e, v):
    """(nabla_{d,e} (x) id) nabla_{R,d+e}(v)."""
    S, R = sheaf.stack, sheaf.R
    w = extend_comodule(sheaf, d + e, v).coords
    rd, re_ = S.algebra(d).rank, S.algebra(e).rank
    flat = [R.zero] * (rd * re_)
    for wk, row in zip(w, S.nabla[(d, e)]):
        for idx, a in enumerate(row):
            if not a.is_zero():
                flat[idx] = flat[idx] + coerce(a, R) * wk
    return tuple(tuple(flat[i * re_ : (i + 1) * re_]) for i in range(rd))


def frobenius_defect(sheaf: SheafOfRings, v: Element) -> Element:
    """(nu_1 (x) id) nabla_{R,1}(v) - v^p, to be read in R/pR."""
    S, R = sheaf.stack, sheaf.R
    coords = extend_comodule(sheaf, 1, v).coords
    nu = S.nu[1]
    image = sum((coerce(n, R) * c for n, c in zip(nu, coords)), R.zero)
    return image - v ** S.ctx.p


def congruence_failures(sheaf: SheafOfRings) -> list[str]:
    if sheaf.max_degree < 1:
        return []
    R = sheaf.R
    return [name for name, v in zip(R.var_names, R.gens())
            if not divisible_by_p(frobenius_defect(sheaf, v))]


def check_frobenius_congruence(sheaf: SheafOfRings) -> bool:
    """Degree-1 Frobenius congruence on every generator (enough for all d)."""
    return not congruence_failures(sheaf)


def adams_operation(sheaf: SheafOfRings, x: Element) -> Element:
    """psi_R(x) = (q (x) id) nabla_{R,h}(x)."""
    h = sheaf.stack.h
    if sheaf.max_degree < h:
        raise SheafError(f"degree-{h} comodule data missing")
    R = sheaf.R
    coords = extend_comodule(sheaf, h, x).coords
    return sum((coerce(qi, R) * c for qi, c in zip(sheaf.stack.q, coords)), R.zero)


def adams_map(sheaf: SheafOfRings) -> AlgebraMap:
    R = sheaf.R
    return AlgebraMap(R, R, tuple(adams_operation(sheaf, v) for v in R.gens()))


def adams_property_suite(sheaf: SheafOfRings) -> Report:
    rep = Report("Adams operation properties")
    S, R = sheaf.stack, sheaf.R
    O = S.O
    psi = adams_map(sheaf)
    bad = [u for u in O.u_names
           if psi.image(u) != coerce(S.psi_O.image(u), R)]
    rep.add("psi_R iota_R = iota_R psi_O", not bad, f"fails at {bad[0]}" if bad else "")
    for d in range(0, sheaf.max_degree + 1):
        bad = []
        for name, v in zip(R.var_names, R.gens()):
            lhs = extend_comodule(sheaf, d, psi(v)).coords
            rhs = _psi_tensor(sheaf, d, psi, extend_comodule(sheaf, d, v).coords)
            if lhs != rhs:
                bad.append(name)
        rep.add(f"Adams equivariance square at d={d}", not bad,
                f"fails at generator {bad[0]}" if bad else "")
    fails = congruence_failures(sheaf)
    name = f"psi_R(x) = x^{S.ctx.p ** S.h} mod mR"
    if fails:
        rep.add(name, None, f"not applicable: Frobenius congruence fails at {fails[0]}")
    else:
        qpow = S.ctx.p ** S.h
        bad = [n for n, v in zip(R.var_names, R.gens()) if madic_order(psi(v) - v**qpow) < 1]
        rep.add(name, not bad, f"fails at generator {bad[0]}" if bad else "")
    return rep


def _psi_tensor(sheaf, d, psi: AlgebraMap, coords):
    """(psi_{O_d} (x) psi_R) on O_d (x) R."""
    S, R = sheaf.stack, sheaf.R
    alg = S.algebra(d)
    acc = [R.zero] * alg.rank
    for i, r in enumerate(coords):
        if r.is_zero():
            continue
        pr = psi(r)
        for k, b in enumerate(S.psi_basis[d][i]):
            if not b.is_zero():
                acc[k] = acc[k] + coerce(b, R) * pr
    return tuple(acc)


def sheaf_as_frobenius_ring(sheaf: SheafOfRings) -> FrobeniusRing:
    """(R, mR, psi_R), complete by truncation; perfect iff psi_R inverts."""
    fails = congruence_failures(sheaf)
    if fails:
        raise CongruenceError(f"Frobenius congruence failed at generator {fails[0]}")
    psi = adams_map(sheaf)
    try:
        _inverse(psi)
        perfect = True
    except ArithmeticError:
        perfect = False
    return FrobeniusRing.with_maximal_ideal(sheaf.R, psi, complete=True, perfect=perfect)


# -- documents --------------------------------------------------------------------


def _resolve_stack(doc: dict, base_dir: Path | None, precision: int | None) -> StackData:
    ref = doc.get("stack")
    if ref is None:
        raise SchemaError("sheaf document needs a 'stack' reference")
    if ref == "height-one":
        try:
            p = int(doc["p"])
        except (KeyError, ValueError):
            raise SchemaError("built-in height-one stack needs an integer 'p'") from None
        M = precision if precision is not None else int(doc.get("precision", 8))
        return height_one_stack(p, M, int(doc.get("max_degree", 2)))
    if isinstance(ref, dict):
        return load_stack(ref, precision)
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read stack file {path}: {exc}") from None
    return load_stack(text, precision)


def parse_sheaf(document: str | dict, base_dir: Path | None = None,
                precision: int | None = None) -> SheafOfRings:
    doc = json.loads(document) if isinstance(document, str) else document
    if doc.get("format", SHEAF_FORMAT) != SHEAF_FORMAT:
        raise SchemaError(f"unknown format {doc.get('format')!r}")
    if precision is None and "precision" in doc and doc.get("stack") != "height-one":
        precision = int(doc["precision"])
    stack = _resolve_stack(doc, base_dir, precision)
    gens = doc.get("generators")
    if not isinstance(gens, list):
        raise SchemaError("'generators' must be a list of names")
    try:
        R = PolyAlgebra(stack.O, tuple(gens))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    nabla_raw = doc.get("nabla")
    if not isinstance(nabla_raw, dict):
        raise SchemaError("'nabla' must map degrees to generator images")

    def parse(text):
        try:
            return R.parse(str(text))
        except ValueError as exc:
            raise SchemaError(str(exc)) from None

    if doc.get("complete_by_iteration"):
        if set(nabla_raw) != {"1"}:
            raise SchemaError("iteration takes only the degree-1 images")
        first = nabla_raw["1"]
        if len(first) != len(gens):
            raise SchemaError("one degree-1 image per generator required")
        images = {}
        for g, coords in zip(gens, first):
            if not isinstance(coords, list) or len(coords) != 1:
                raise SchemaError("rank-one tensors have exactly one coordinate")
            images[g] = parse(coords[0])
        try:
            return SheafOfRings.iterated(stack, R, images)
        except SheafError as exc:
            raise SchemaError(str(exc)) from None
    levels = []
    for d in range(1, stack.max_degree + 1):
        raw = nabla_raw.get(str(d))
        if raw is None or len(raw) != len(gens):
            raise SchemaError(f"degree {d}: one image per generator required")
        r = stack.algebra(d).rank
        row = []
        for coords in raw:
            if not isinstance(coords, list) or len(coords) != r:
                raise SchemaError(f"degree {d}: tensors need {r} coordinates")
            row.append(TensorElement(d, tuple(parse(c) for c in coords)))
        levels.append(tuple(row))
    return SheafOfRings(stack, R, tuple(levels))


def serialize_sheaf(sheaf: SheafOfRings, stack_ref) -> dict:
    return {
        "format": SHEAF_FORMAT,
        "stack": stack_ref,
        "generators": list(sheaf.generators),
        "nabla": {
            str(d): [[render(c) for c in t.coords] for t in imgs]
            for d, imgs in enumerate(sheaf.nabla, start=1)
        },
    }


def sheaf_from_path(path: str | Path, precision: int | None = None) -> SheafOfRings:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    try:
        return parse_sheaf(text, path.parent, precision)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from None
