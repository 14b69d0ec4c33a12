#!/usr/bin/env python3
"""External solver adapter: solve an LP file with HiGHS, write a raw solution file.

usage: highs_solve.py MODEL.lp SOLUTION.sol
"""
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print(f"could not read {sys.argv[1]}", file=sys.stderr)
        return 1
    h.run()
    h.writeSolution(sys.argv[2], 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
