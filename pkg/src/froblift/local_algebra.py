"""Exact arithmetic in Z_p[[u_1, ..., u_{h-1}]] and polynomial algebras over it,
truncated modulo the M-th power of the maximal ideal m = (p, u_1, ..., u_{h-1}).

Elements are stored as sparse dicts from exponent tuples to integers.  The
exponent tuple lists the u-variables first, then the polynomial generators.
A term of u-degree e has its coefficient kept modulo p^(M - e); terms with
u-degree >= M vanish.  This is exactly the quotient by m^M (times the
polynomial algebra), so every ring handled here is complete by construction.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

INF = math.inf


class PrecisionError(ValueError):
    """A question that cannot be decided at the working precision."""


class RingMismatchError(TypeError):
    pass


class NonInvertibleError(ArithmeticError):
    pass


class ConvergenceError(ArithmeticError):
    pass


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, math.isqrt(n) + 1))


def p_valuation(n: int, p: int) -> int | float:
    if n == 0:
        return INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PrecisionContext:
    """Prime p, height h and m-adic working precision M."""

    p: int
    h: int
    M: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.h < 1:
            raise ValueError("height must be >= 1")
        if self.M < 1:
            raise ValueError("precision must be >= 1")

    def with_precision(self, M: int) -> "PrecisionContext":
        return PrecisionContext(self.p, self.h, M)


class _TruncatedRing:
    """Shared machinery for LocalRing and PolyAlgebra.

    Subclasses provide ``ctx``, ``u_names`` and ``generators``.
    """

    ctx: PrecisionContext
    generators: tuple[str, ...]

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def M(self) -> int:
        return self.ctx.M

    @property
    def n_u(self) -> int:
        return self.ctx.h - 1

    @property
    def u_names(self) -> tuple[str, ...]:
        return tuple(f"u{i + 1}" for i in range(self.ctx.h - 1))

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.u_names + self.generators

    @property
    def nvars(self) -> int:
        return len(self.var_names)

    @cached_property
    def _moduli(self) -> tuple[int, ...]:
        p, M = self.ctx.p, self.ctx.M
        return tuple(p ** (M - e) for e in range(M))

    def _reduce(self, terms: dict) -> dict:
        n_u, M, mods = self.n_u, self.ctx.M, self._moduli
        out = {}
        for exps, c in terms.items():
            e = sum(exps[:n_u])
            if e >= M:
                continue
            c %= mods[e]
            if c:
                out[exps] = c
        return out

    def element(self, terms: dict, *, reduced: bool = False) -> "Element":
        return Element(self, terms if reduced else self._reduce(terms))

    @property
    def zero(self) -> "Element":
        return Element(self, {})

    @property
    def one(self) -> "Element":
        return self.from_int(1)

    def from_int(self, n: int) -> "Element":
        return self.element({(0,) * self.nvars: n})

    def var(self, name: str) -> "Element":
        try:
            i = self.var_names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a variable of {self}") from None
        exps = [0] * self.nvars
        exps[i] = 1
        return self.element({tuple(exps): 1})

    def gens(self) -> list["Element"]:
        return [self.var(n) for n in self.var_names]

    def __call__(self, x) -> "Element":
        if isinstance(x, Element):
            if x.ring != self:
                return coerce(x, self)
            return x
        if isinstance(x, int):
            return self.from_int(x)
        if isinstance(x, str):
            return self.parse(x)
        raise TypeError(f"cannot convert {type(x).__name__} into {self}")

    def parse(self, text: str) -> "Element":
        return _Parser(self, text).parse()


@dataclass(frozen=True)
class LocalRing(_TruncatedRing):
    """O = Z_p[[u_1, ..., u_{h-1}]] modulo m^M (residue field F_p)."""

    ctx: PrecisionContext
    generators: tuple[str, ...] = field(default=(), init=False)

    @property
    def base(self) -> "LocalRing":
        return self

    def with_precision(self, M: int) -> "LocalRing":
        return LocalRing(self.ctx.with_precision(M))

    def __str__(self):
        us = ", ".join(self.u_names)
        s = f"Z_{self.p}[[{us}]]" if us else f"Z_{self.p}"
        return f"{s} mod m^{self.M}"


@dataclass(frozen=True)
class PolyAlgebra(_TruncatedRing):
    """Polynomial algebra O[x_1, ..., x_n] modulo m^M."""

    base: LocalRing
    generators: tuple[str, ...]

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if len(set(gens)) != len(gens):
            raise ValueError(f"generator names must be distinct: {gens}")
        for g in gens:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", g):
                raise ValueError(f"bad generator name {g!r}")
            if g in self.base.u_names:
                raise ValueError(f"generator {g!r} clashes with a u-variable")

    @property
    def ctx(self) -> PrecisionContext:
        return self.base.ctx

    def with_precision(self, M: int) -> "PolyAlgebra":
        return PolyAlgebra(self.base.with_precision(M), self.generators)

    def __str__(self):
        return f"{self.base}[{', '.join(self.generators)}]"


Ring = LocalRing | PolyAlgebra


class Element:
    """An element of a truncated ring.  Immutable."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: _TruncatedRing, terms: dict):
        self.ring = ring
        self.terms = terms
        self._hash = None

    def _lift(self, other) -> "Element":
        if isinstance(other, Element):
            if other.ring != self.ring:
                raise RingMismatchError(f"{other.ring} is not {self.ring}")
            return other
        if isinstance(other, int):
            return self.ring.from_int(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return self.ring.element(terms)

    __radd__ = __add__

    def __neg__(self):
        return self.ring.element({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        ring = self.ring
        n_u, M = ring.n_u, ring.M
        acc: dict = {}
        a_items = [(k, c, sum(k[:n_u])) for k, c in self.terms.items()]
        b_items = [(k, c, sum(k[:n_u])) for k, c in other.terms.items()]
        for ka, ca, ea in a_items:
            for kb, cb, eb in b_items:
                if ea + eb >= M:
                    continue
                k = tuple(i + j for i, j in zip(ka, kb))
                acc[k] = acc.get(k, 0) + ca * cb
        return ring.element(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported")
        result = self.ring.one
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring.from_int(other)
        if not isinstance(other, Element):
            return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.ring.nvars, 0)

    def __repr__(self):
        return f"Element({render(self)!r} in {self.ring})"

    def __str__(self):
        return render(self)


# -- canonical rendering -------------------------------------------------------


def _monomial(names, exps) -> str:
    parts = []
    for name, a in zip(names, exps):
        if a == 1:
            parts.append(name)
        elif a > 1:
            parts.append(f"{name}^{a}")
    return "*".join(parts)


def sorted_terms(x: Element):
    """Terms in descending graded-lex order (variables ordered u's first)."""
    return sorted(x.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)


def render(x: Element) -> str:
    if not x.terms:
        return "0"
    names = x.ring.var_names
    out = []
    for exps, c in sorted_terms(x):
        mono = _monomial(names, exps)
        if not mono:
            out.append(str(c))
        elif c == 1:
            out.append(mono)
        else:
            out.append(f"{c}*{mono}")
    return " + ".join(out)


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


class _Parser:
    """Recursive-descent parser for sums/products/powers of integers and variables."""

    def __init__(self, ring, text: str):
        self.ring = ring
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                break
            num, name, sym = m.groups()
            if num is not None:
                self.tokens.append(("num", int(num)))
            elif name is not None:
                self.tokens.append(("name", name))
            else:
                self.tokens.append(("sym", sym))
            pos = m.end()
        self.i = 0
        self.text = text

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def _take(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _fail(self, msg):
        raise ValueError(f"cannot parse {self.text!r}: {msg}")

    def parse(self) -> Element:
        if not self.tokens:
            self._fail("empty expression")
        value = self._expr()
        if self.i != len(self.tokens):
            self._fail(f"unexpected token {self._peek()[1]!r}")
        return value

    def _expr(self):
        sign = 1
        if self._peek() == ("sym", "-"):
            self._take()
            sign = -1
        elif self._peek() == ("sym", "+"):
            self._take()
        value = self._term()
        if sign < 0:
            value = -value
        while self._peek() in (("sym", "+"), ("sym", "-")):
            op = self._take()[1]
            rhs = self._term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self):
        value = self._factor()
        while self._peek() == ("sym", "*"):
            self._take()
            value = value * self._factor()
        return value

    def _factor(self):
        kind, val = self._take()
        if kind == "num":
            base = self.ring.from_int(val)
        elif kind == "name":
            if val not in self.ring.var_names:
                self._fail(f"unknown variable {val!r}")
            base = self.ring.var(val)
        elif (kind, val) == ("sym", "("):
            base = self._expr()
            if self._take() != ("sym", ")"):
                self._fail("missing ')'")
        else:
            self._fail(f"unexpected token {val!r}")
        if self._peek() == ("sym", "^"):
            self._take()
            kind, n = self._take()
            if kind != "num":
                self._fail("exponent must be a non-negative integer")
            base = base**n
        return base


# -- order, coercion -----------------------------------------------------------


def madic_order(x: Element) -> int | float:
    """Largest k with x in m^k (infinity for x == 0 mod m^M)."""
    if not x.terms:
        return INF
    n_u, p = x.ring.n_u, x.ring.p
    return min(sum(k[:n_u]) + p_valuation(c, p) for k, c in x.terms.items())


def coerce(x: Element, ring: _TruncatedRing) -> Element:
    """Move x into another ring over the same prime and height.

    Variables are matched by name; the precision may drop (truncation) but
    not rise, and terms in variables absent from ``ring`` are an error.
    """
    src = x.ring
    if src.p != ring.p or src.n_u != ring.n_u:
        raise RingMismatchError(f"cannot coerce from {src} to {ring}")
    if ring.M > src.M and x.terms:
        raise PrecisionError(f"cannot raise precision from {src.M} to {ring.M}")
    index = {name: i for i, name in enumerate(ring.var_names)}
    positions = []
    for name in src.var_names:
        positions.append(index.get(name))
    terms = {}
    for exps, c in x.terms.items():
        new = [0] * ring.nvars
        for a, pos, name in zip(exps, positions, src.var_names):
            if a:
                if pos is None:
                    raise RingMismatchError(f"variable {name} does not exist in {ring}")
                new[pos] = a
        new = tuple(new)
        terms[new] = terms.get(new, 0) + c
    return ring.element(terms)


def reduce_mod_p(x: Element) -> Element:
    """Representative of x in R/pR: coefficients reduced into [0, p)."""
    p = x.ring.p
    return x.ring.element({k: c % p for k, c in x.terms.items()})


def divisible_by_p(x: Element) -> bool:
    p = x.ring.p
    return all(c % p == 0 for c in x.terms.values())


def reduce_mod_m(x: Element) -> Element:
    """Image of x in R/mR (u-free terms, coefficients mod p)."""
    n_u, p = x.ring.n_u, x.ring.p
    return x.ring.element(
        {k: c % p for k, c in x.terms.items() if not any(k[:n_u])}
    )


def ring_arith(op: str, x: Element, y: Element) -> Element:
    if x.ring != y.ring:
        raise RingMismatchError(f"{x.ring} vs {y.ring}")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


# -- algebra maps --------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraMap:
    """Ring map given by the images of every variable (u's, then generators).

    The coefficient ring Z_p maps identically.  Images of u-variables must lie
    in the maximal ideal so that the map is continuous and well defined
    modulo m^M.
    """

    source: Ring
    target: Ring
    images: tuple[Element, ...]

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        if self.source.ctx != self.target.ctx:
            raise RingMismatchError(f"{self.source} and {self.target} have different contexts")
        if len(images) != self.source.nvars:
            raise ValueError(
                f"expected {self.source.nvars} images, got {len(images)}"
            )
        for y in images:
            if not isinstance(y, Element) or y.ring != self.target:
                raise RingMismatchError(f"image {y!r} does not lie in {self.target}")
        for name, y in zip(self.source.u_names, images):
            if madic_order(y) < 1:
                raise ValueError(f"image of {name} must lie in the maximal ideal")

    @classmethod
    def identity(cls, ring: Ring) -> "AlgebraMap":
        return cls(ring, ring, tuple(ring.gens()))

    @classmethod
    def over_base(cls, source: Ring, target: Ring, images: dict) -> "AlgebraMap":
        """O-algebra map: each u_i goes to u_i, generators to ``images``."""
        imgs = []
        for name in source.var_names:
            if name in source.u_names:
                imgs.append(target.var(name))
            else:
                if name not in images:
                    raise ValueError(f"no image given for generator {name!r}")
                imgs.append(target(images[name]))
        extra = set(images) - set(source.generators)
        if extra:
            raise ValueError(f"unknown generators {sorted(extra)}")
        return cls(source, target, tuple(imgs))

    def image(self, name: str) -> Element:
        return self.images[self.source.var_names.index(name)]

    def __call__(self, x: Element) -> Element:
        return apply_map(self, x)

    def with_precision(self, M: int) -> "AlgebraMap":
        src, tgt = self.source.with_precision(M), self.target.with_precision(M)
        return AlgebraMap(src, tgt, tuple(coerce(y, tgt) for y in self.images))

    def __str__(self):
        return ", ".join(
            f"{n} -> {render(y)}" for n, y in zip(self.source.var_names, self.images)
        )


def apply_map(f: AlgebraMap, x: Element) -> Element:
    if x.ring != f.source:
        raise RingMismatchError(f"{x} is not in the source {f.source}")
    target = f.target
    powers: list[list[Element]] = [[target.one, img] for img in f.images]

    def power(i: int, k: int) -> Element:
        cache = powers[i]
        while len(cache) <= k:
            cache.append(cache[-1] * f.images[i])
        return cache[k]

    acc: dict = {}
    for exps, c in x.terms.items():
        term = None
        for i, k in enumerate(exps):
            if k:
                pk = power(i, k)
                term = pk if term is None else term * pk
        if term is None:
            key = (0,) * target.nvars
            acc[key] = acc.get(key, 0) + c
            continue
        for key, d in term.terms.items():
            acc[key] = acc.get(key, 0) + c * d
    return target.element(acc)


def compose_maps(f: AlgebraMap, g: AlgebraMap) -> AlgebraMap:
    """f after g."""
    if g.target != f.source:
        raise RingMismatchError(f"cannot compose: {g.target} is not {f.source}")
    return AlgebraMap(g.source, f.target, tuple(apply_map(f, y) for y in g.images))


def maps_equal_mod(f: AlgebraMap, g: AlgebraMap, k: int) -> bool:
    """True iff f and g agree on every variable modulo m^k."""
    if f.source != g.source or f.target != g.target:
        raise RingMismatchError("maps have different source or target")
    if k > f.target.M:
        raise PrecisionError(f"k={k} exceeds working precision {f.target.M}")
    return all(madic_order(a - b) >= k for a, b in zip(f.images, g.images))


# -- inversion -----------------------------------------------------------------


def _inverse_mod_p(matrix: list[list[int]], p: int) -> list[list[int]]:
    n = len(matrix)
    aug = [[v % p for v in row] + [int(i == j) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise NonInvertibleError("linearization is singular modulo p")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = pow(aug[col][col], -1, p)
        aug[col] = [v * inv % p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(a - f * b) % p for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _linearization(psi: AlgebraMap, mixed_ok: bool) -> tuple[list[list[int]], list[int]]:
    """Jacobian of psi modulo m, plus the constant part of each x-image mod m.

    Raises NonInvertibleError unless psi mod m is affine in the generators.
    Terms u*x are only allowed when ``mixed_ok`` (u-images free of generators),
    since then the u-block can be solved first and the terms stop mattering.
    """
    ring = psi.source
    n_u, n, p = ring.n_u, ring.nvars, ring.p
    jac = [[0] * n for _ in range(n)]
    const = [0] * n
    for i, img in enumerate(psi.images):
        for exps, c in img.terms.items():
            c %= p
            if not c:
                continue
            e = sum(exps[:n_u])
            xdeg = sum(exps[n_u:])
            if e == 0:
                if xdeg == 0:
                    const[i] = c
                elif xdeg == 1:
                    jac[i][exps.index(1, n_u)] = c
                else:
                    raise NonInvertibleError(
                        f"image of {ring.var_names[i]} is not affine modulo m"
                    )
            elif e == 1:
                if xdeg == 0:
                    jac[i][exps.index(1)] = c
                elif not mixed_ok:
                    raise NonInvertibleError(
                        f"linearization of {ring.var_names[i]} is not constant modulo m"
                    )
    if ring.M == 1:
        # u = 0 at precision 1, so the u-block carries no information
        for i in range(n_u):
            jac[i][i] = 1
    return jac, const


def _refine(psi: AlgebraMap, phi: list, idx: list[int], jac) -> list:
    """Correct phi on the variables ``idx`` until phi(psi(v)) = v there."""
    ring = psi.source
    gens = ring.gens()
    jinv = _inverse_mod_p([[jac[i][j] for j in idx] for i in idx], ring.p)
    for k in range(1, ring.M + 1):
        current = AlgebraMap(ring, ring, tuple(phi))
        err = [apply_map(current, psi.images[i]) - gens[i] for i in idx]
        if all(e.is_zero() for e in err):
            return phi
        if min(madic_order(e) for e in err) < k:
            raise ConvergenceError("successive approximation lost precision")
        for a, i in enumerate(idx):
            phi[i] = phi[i] - sum((jinv[a][b] * err[b] for b in range(len(idx)) if jinv[a][b]),
                                  ring.zero)
    return phi


def invert_automorphism(psi: AlgebraMap) -> AlgebraMap:
    """Inverse of an endomorphism by m-adic successive approximation.

    Solves phi(psi(v)) = v one m-adic degree at a time, correcting with the
    inverse of the linearization of psi modulo m.  When the u-images do not
    involve the generators, the u-variables are solved first.
    """
    ring = psi.source
    if psi.target != ring:
        raise RingMismatchError("only endomorphisms can be inverted")
    n_u, n = ring.n_u, ring.nvars
    if n == 0:
        return psi
    u_idx, x_idx = list(range(n_u)), list(range(n_u, n))
    u_free = all(not any(k[n_u:]) for y in psi.images[:n_u] for k in y.terms)
    jac, const = _linearization(psi, mixed_ok=u_free)
    if any(jac[i][j] for i in u_idx for j in x_idx):
        raise NonInvertibleError("u-images have generator-linear parts modulo m")
    p = ring.p
    xinv = _inverse_mod_p([[jac[i][j] for j in x_idx] for i in x_idx], p) if x_idx else []

    # mod m: u -> 0, x -> A^{-1}(x - b) on the generator block
    gens = ring.gens()
    phi = [ring.zero] * n
    for a, i in enumerate(x_idx):
        phi[i] = sum((xinv[a][b] * (gens[j] - const[j]) for b, j in enumerate(x_idx)
                      if xinv[a][b]), ring.zero)
    blocks = [u_idx, x_idx] if u_free else [u_idx + x_idx]
    for idx in blocks:
        if idx:
            phi = _refine(psi, phi, idx, jac)
    inverse = AlgebraMap(ring, ring, tuple(phi))
    ident = AlgebraMap.identity(ring)
    if compose_maps(inverse, psi) != ident or compose_maps(psi, inverse) != ident:
        raise ConvergenceError("inverse did not converge within the precision budget")
    return inverse
