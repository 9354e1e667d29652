"""Watch conjugation contract two nearby maps toward the same equivariant lift.

Starts from x -> c and x -> c + p^r * noise into Z_p and prints the m-adic
agreement order of the two iterates and the distance of each iterate from
the fixed point after every conjugation step.
"""
import argparse
import random

from froblift import (
    AlgebraMap,
    FrobeniusRing,
    LocalRing,
    PolyAlgebra,
    PrecisionContext,
    agreement_order,
    conjugate_step,
    frobenius_lift_hom,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=int, default=3)
    parser.add_argument("--precision", type=int, default=12)
    parser.add_argument("--psi", default=None, help="image of x under psi (default x^p + p*x)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    p, M = args.p, args.precision
    rng = random.Random(args.seed)

    O = LocalRing(PrecisionContext(p, 1, M))
    Z = FrobeniusRing.with_maximal_ideal(O, AlgebraMap.identity(O), perfect=True)
    R = PolyAlgebra(O, ("x",))
    psi = AlgebraMap.over_base(R, R, {"x": R.parse(args.psi or f"x^{p} + {p}*x")})
    Rf = FrobeniusRing.with_maximal_ideal(R, psi)

    c = rng.randrange(p)
    mu1 = AlgebraMap.over_base(R, O, {"x": c})
    mu2 = AlgebraMap.over_base(R, O, {"x": c + p * rng.randrange(1, p**M)})
    target = frobenius_lift_hom(mu1, Rf, Z).underlying
    print(f"p = {p}, M = {M}, residue {c}, equivariant lift x -> {target.image('x')}")
    print("step  agree(mu1, mu2)  agree(mu1, lift)  agree(mu2, lift)")
    for step in range(M + 1):
        print(f"{step:4d}  {agreement_order(mu1, mu2, Z):15d}  "
              f"{agreement_order(mu1, target, Z):16d}  {agreement_order(mu2, target, Z):16d}")
        if agreement_order(mu1, target, Z) >= M and agreement_order(mu2, target, Z) >= M:
            break
        mu1, mu2 = conjugate_step(mu1, Rf, Z), conjugate_step(mu2, Rf, Z)


if __name__ == "__main__":
    main()
