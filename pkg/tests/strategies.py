"""Hypothesis strategies for truncated rings and their elements."""
from hypothesis import strategies as st

from froblift.local_algebra import LocalRing, PolyAlgebra, PrecisionContext

PRIMES = (2, 3, 5)


@st.composite
def contexts(draw, heights=(1, 2), max_precision=5):
    p = draw(st.sampled_from(PRIMES))
    h = draw(st.sampled_from(heights))
    M = draw(st.integers(1, max_precision))
    return PrecisionContext(p, h, M)


@st.composite
def rings(draw, n_gens=(0, 2), **kw):
    ctx = draw(contexts(**kw))
    O = LocalRing(ctx)
    n = draw(st.integers(*n_gens))
    if n == 0:
        return O
    return PolyAlgebra(O, tuple(f"x{i + 1}" for i in range(n)))


def elements(ring, max_terms=5, max_exp=3):
    key = st.tuples(*[st.integers(0, max_exp) for _ in range(ring.nvars)])
    coeff = st.integers(-(ring.p ** ring.M), ring.p ** ring.M)
    return st.dictionaries(key, coeff, max_size=max_terms).map(ring.element)


def ideal_elements(ring, **kw):
    """Elements of the maximal ideal m * ring."""
    gens = [ring.from_int(ring.p)] + [ring.var(u) for u in ring.u_names]
    return st.lists(elements(ring, **kw), min_size=len(gens), max_size=len(gens)).map(
        lambda cs: sum((c * g for c, g in zip(cs, gens)), ring.zero)
    )
