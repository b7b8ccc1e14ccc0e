#!/usr/bin/env python3
"""Walk through the real-backend counterexample and print the key numbers."""

import numpy as np

from gpt_tomo import (
    apply,
    complete_state,
    counterexample_report,
    equal_on_source,
    equal_processes,
    equal_upon_input,
    preparation_test,
    randomize,
    rebit_processes,
    spanning_states,
    system,
)
from gpt_tomo.core import REAL


def main() -> None:
    rebit = system(REAL, 2)
    p, p2 = rebit_processes()

    print("Two distinct rebit channels, probed on single-system inputs:")
    for rho in spanning_states(rebit):
        dev = np.abs(apply(p, rho).matrix - apply(p2, rho).matrix).max()
        print(f"  max output difference on a fiducial state: {dev:.3e}")

    src = spanning_states(rebit)
    source = randomize([preparation_test([s]) for s in src], [1 / len(src)] * len(src))
    print(f"equal on a spanning source:   {equal_on_source(p, p2, source)}")
    print(f"equal upon input of I/2:      {equal_upon_input(p, p2, complete_state(rebit))}")
    print(f"equal as processes:           {equal_processes(p, p2)}")

    rep = counterexample_report()
    print("\nLifted to half of an entangled rebit pair:")
    print(f"  product of the two outputs (Frobenius): {rep.orthogonality_gap:.3e}")
    print(f"  trace distance between outputs:         {rep.trace_distance:.12f}")
    print(f"  max gap over local product effects:     {rep.local_stats_max_gap:.3e}")
    print(f"  lifting rank on the entangled state:    {rep.faithful_rank} (span dim 10)")


if __name__ == "__main__":
    main()
