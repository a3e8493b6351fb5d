"""Grow a 2-2-2 network on two moons and print the accuracy/flops trade-off.

    python3 scripts/run_two_moons.py --noise 0.2 --stages 4 --method rayleigh
"""
import argparse
import dataclasses

from energysplit.data import synth
from energysplit.grow import GrowthConfig, run
from energysplit.net import init_network
from energysplit.rayleigh import RayleighConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--method", choices=("exact", "rayleigh"), default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write stages.jsonl / tradeoff.csv / checkpoint.json here")
    args = p.parse_args()

    data = synth("two_moons", args.n, args.noise, seed=0)
    cfg = GrowthConfig(max_stages=args.stages, index_method=args.method, seed=args.seed,
                       rayleigh=RayleighConfig(learning_rate=0.01, epochs=30))
    result = run(init_network([2, 2, 2], seed=args.seed), data, cfg, args.out)

    print("stage  flops  train_loss  test_acc")
    for pt in result.points:
        print(f"{pt.stage:5d}  {pt.flops:5d}  {pt.train_loss:10.5f}  {pt.test_accuracy:8.3f}")
    for rec in result.records:
        ratio = rec.realized_gain / rec.predicted_gain if rec.predicted_gain else float("nan")
        chosen = ", ".join(f"({s['layer']},{s['index']}) {s['lambda_min']:.4f}" for s in rec.selected)
        print(f"stage {rec.stage}: split {chosen}; realized/predicted {ratio:.3f}")
    print(f"stopped: {result.reason}; hidden sizes {result.net.hidden_sizes}")
    print(dataclasses.asdict(result.points[-1]))


if __name__ == "__main__":
    main()
