"""Compare the compiled and NumPy kernel backends.

Times the dense forward / forward+backward kernels at the shapes training
actually uses (actor and critic networks, act-time batch of 1 and update
batch of n), then optionally times full training epochs through the real
environment loop.  Run from the repository root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --epochs 30
"""

import argparse
import time

import numpy as np

from fd2k import backend, config, federated, marl_env, nn, signals


def time_call(fn, repeats, number):
    """Best mean seconds/call over `repeats` groups of `number` calls."""
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - start) / number)
    return best


def bench_kernels(batch, repeats, number):
    train = config.default_config().train
    shapes = {
        "actor": ((train.M, *train.hidden, train.M), "sigmoid"),
        "critic": ((4 * train.M, *train.hidden, 1), "linear"),
    }
    rng = np.random.default_rng(0)
    rows = []
    for label, (dims, activation) in shapes.items():
        net = nn.init_mlp(dims, activation, seed=1)
        for b in (1, batch):
            x = rng.normal(size=(b, dims[0]))
            g = rng.normal(size=(b, dims[-1]))
            out, cache = net.forward(x)
            timings = {}
            for name in backend.available_backends():
                backend.use(name)
                timings[name] = (
                    time_call(lambda: net.forward(x), repeats, number),
                    time_call(
                        lambda: net.backward(cache, g), repeats, number
                    ),
                )
            rows.append((f"{label} b={b}", timings))
    return rows


def bench_epochs(epochs):
    cfg = config.default_config()
    traces = signals.synth_traces(
        cfg.scenario, cfg.synth, np.random.SeedSequence(0).spawn(3)[2]
    )
    scenario = cfg.scenario.with_normalization(traces)
    results = {}
    for name in backend.available_backends():
        backend.use(name)
        controller, agent_a, agent_b, env, memory, rng = federated.build_run(
            traces, scenario, cfg.train, seed=0
        )
        # fill the memory so every timed epoch includes learning updates
        while len(memory) < cfg.train.n:
            marl_env.train_epoch((agent_a, agent_b), env, memory, cfg.train, rng)
        start = time.perf_counter()
        for _ in range(epochs):
            marl_env.train_epoch((agent_a, agent_b), env, memory, cfg.train, rng)
        results[name] = (time.perf_counter() - start) / epochs
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=128, help="update minibatch size")
    parser.add_argument("--repeats", type=int, default=5, help="timing groups per kernel")
    parser.add_argument("--number", type=int, default=50, help="calls per timing group")
    parser.add_argument(
        "--epochs", type=int, default=0,
        help="also time this many full training epochs per backend",
    )
    args = parser.parse_args(argv)

    names = backend.available_backends()
    print(f"backends: {', '.join(names)} (active default: {backend.active_backend()})")
    if "compiled" not in names:
        print("compiled extension not built; timing the numpy backend only")

    rows = bench_kernels(args.batch, args.repeats, args.number)
    header = f"{'kernel':<14} {'pass':<9}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>9}"
    print()
    print(header)
    for label, timings in rows:
        for i, which in enumerate(("forward", "backward")):
            cells = "".join(f"{timings[n][i] * 1e6:>10.1f}us" for n in names)
            line = f"{label:<14} {which:<9}" + cells
            if len(names) == 2:
                line += f"{timings['numpy'][i] / timings['compiled'][i]:>8.2f}x"
            print(line)

    if args.epochs:
        print()
        per_epoch = bench_epochs(args.epochs)
        for name, seconds in per_epoch.items():
            print(f"epoch ({name}): {seconds * 1e3:.1f} ms")
        if len(per_epoch) == 2:
            ratio = per_epoch["numpy"] / per_epoch["compiled"]
            print(f"epoch speedup: {ratio:.2f}x (BLAS-bound at these layer sizes)")


if __name__ == "__main__":
    main()
