"""Tabulate Teichmueller lifts over W(F_p) and their stabilization in M.

For each residue a the lift is printed at several precisions together with
the number of conjugation steps it took before the value stopped changing.
"""
import argparse
import time

from froblift import AlgebraMap, FrobeniusRing, LocalRing, PrecisionContext, teichmuller_lift


def perfect_base(p, M):
    O = LocalRing(PrecisionContext(p, 1, M))
    return FrobeniusRing.with_maximal_ideal(O, AlgebraMap.identity(O), perfect=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--primes", type=int, nargs="+", default=[2, 3, 5, 7])
    parser.add_argument("--precisions", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    args = parser.parse_args()
    for p in args.primes:
        print(f"p = {p}")
        for a in range(p):
            row = []
            for M in args.precisions:
                Z = perfect_base(p, M)
                row.append(str(teichmuller_lift(Z, a).constant_term()))
            print(f"  a = {a}: " + ", ".join(f"M={M}: {v}" for M, v in zip(args.precisions, row)))
        start = time.perf_counter()
        Z = perfect_base(p, 20)
        for a in range(p):
            t = teichmuller_lift(Z, a)
            assert t**p == t
        print(f"  all lifts at M = 20 in {time.perf_counter() - start:.4f}s")


if __name__ == "__main__":
    main()
