"""Energy-aware vs vanilla splitting on two spirals, over several seeds.

For each seed and mode, reports the flops at the first stage whose test
accuracy reaches the target, plus the full trade-off curve as CSV rows.
"""
import argparse

from energysplit.data import synth
from energysplit.grow import GrowthConfig, run
from energysplit.net import init_network


def flops_at(points, target):
    return next((p.flops for p in points if p.test_accuracy >= target), None)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--stages", type=int, default=12)
    p.add_argument("--target", type=float, default=0.9)
    p.add_argument("--hidden", type=int, nargs="+", default=[2])
    args = p.parse_args()

    data = synth("spirals", 1000, 0.05, seed=0)
    sizes = [2, *args.hidden, 2]
    wins = 0
    print("seed,mode,stage,flops,test_accuracy")
    for seed in range(args.seeds):
        reached = {}
        for mode in ("energy", "vanilla"):
            cfg = GrowthConfig(max_stages=args.stages, seed=seed, vanilla=(mode == "vanilla"))
            points = run(init_network(sizes, seed=seed), data, cfg).points
            for pt in points:
                print(f"{seed},{mode},{pt.stage},{pt.flops},{pt.test_accuracy:.4f}")
            reached[mode] = flops_at(points, args.target)
        e, v = reached["energy"], reached["vanilla"]
        wins += e is not None and (v is None or e <= v)
        print(f"# seed {seed}: flops at {args.target:.2f} accuracy, energy {e}, vanilla {v}")
    print(f"# energy-aware no worse in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
