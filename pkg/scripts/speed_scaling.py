"""Wall-clock of explicit build + Jacobi vs matrix-free Rayleigh descent as d grows."""
import argparse
import statistics
import time

import numpy as np

from energysplit.data import Dataset
from energysplit.net import NeuronRef, init_network
from energysplit.rayleigh import RayleighConfig, rayleigh_descent
from energysplit.splitmat import exact_indexes

CFG = RayleighConfig(learning_rate=0.01, epochs=30)


def median_seconds(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dims", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    ref = NeuronRef(0, 0)
    print("d,explicit_s,matrix_free_s,speedup,lambda_exact,lambda_rayleigh")
    for d in args.dims:
        net = init_network([d - 1, 1, 1], loss_head="mse", seed=d)
        data = Dataset.from_arrays(rng.normal(size=(args.n, d - 1)), rng.normal(size=(args.n, 1)))
        exact = exact_indexes(net, data)[ref]
        est = rayleigh_descent(net, data, CFG, refs=[ref])[ref]
        t_exact = median_seconds(lambda: exact_indexes(net, data), args.repeats)
        t_free = median_seconds(lambda: rayleigh_descent(net, data, CFG, refs=[ref]), args.repeats)
        print(f"{d},{t_exact:.4f},{t_free:.4f},{t_exact / t_free:.1f},{exact.lambda_min:.6g},{est.lambda_min:.6g}")


if __name__ == "__main__":
    main()
