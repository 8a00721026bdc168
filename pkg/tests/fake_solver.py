"""Stand-in solver: answers any LP of an instance with the HR1 valuation.

Usage: fake_solver.py INSTANCE LP
Prints ``name value`` lines for the LP's binaries that the HR1 plan sets to 1.
"""

import sys

from mpspcrp.heuristics import hr1
from mpspcrp.instances import parse
from mpspcrp.milp import plan_to_assignment, read_lp
from mpspcrp.milp.model import var_name


def main() -> None:
    inst = parse(sys.argv[1])
    with open(sys.argv[2]) as fh:
        names = set(read_lp(fh.read()).binaries)
    a = plan_to_assignment(inst, hr1(inst).best_plan)
    for key in a.nonzero():
        if var_name(key) in names:
            print(f"{var_name(key)} 1")


if __name__ == "__main__":
    main()
