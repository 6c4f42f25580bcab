"""TQO accuracy of an orthogonal product pair after short random circuits and after a toric-code preparation circuit."""
import argparse

import numpy as np

from lrlab.experiments.tqo import (
    circuit_lower_bound_demo, circuit_protocol, product_pair, random_two_local_layers,
    toric_preparation_layers,
)
from lrlab.hamiltonian import apply_x_string
from lrlab.lattice import build_toric_code_layout
from lrlab.quantum import PureState


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    layout = build_toric_code_layout(2, 2)
    graph, n = layout.graph, layout.n_qubits
    l_f = graph.diameter / 2
    for depth in (1, 2):
        eps = []
        for seed in range(args.seeds):
            layers = random_two_local_layers(graph, depth, np.random.default_rng(seed))
            spec, dur = circuit_protocol(n, layers, graph)
            eps.append(circuit_lower_bound_demo(product_pair(n), spec, dur, l_f, graph).eps_final)
        print(f"random depth {depth}: eps(l={l_f:g}) min {min(eps):.3f} median {np.median(eps):.3f}")

    layers, loop = toric_preparation_layers(layout)
    zero = PureState.basis("0" * n)
    pair = (zero, PureState(apply_x_string(zero.amplitudes, loop)))
    spec, dur = circuit_protocol(n, layers, graph)
    rep = circuit_lower_bound_demo(pair, spec, dur, l_f, graph)
    print(f"preparation circuit, depth {len(layers)}: eps initial {rep.eps_initial:.3f}, final {rep.eps_final:.2e}")


if __name__ == "__main__":
    main()
