"""Command-line surface: simulate, train, evaluate, nist.

Configuration comes from an optional TOML-subset file composed with flag
overrides (flags win); the ``FD2K_SEED`` environment variable overrides
every other seed source.  Each run echoes its effective configuration into
the output directory.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error,
3 statistical-suite failure (``nist`` with a failing or empty report).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation, federated, keygen, marl_env, nn, randomness, signals
from .config import (
    ConfigError,
    RunConfig,
    default_config,
    dumps,
    from_doc,
    loads,
    save_config,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3

SEED_ENV_VAR = "FD2K_SEED"


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE", help="TOML config file")
    sub.add_argument("--output-dir", metavar="DIR", help="where artifacts are written")
    sub.add_argument("--seed", type=int, help=f"RNG seed (overridden by ${SEED_ENV_VAR})")
    hp = sub.add_argument_group("training parameters")
    hp.add_argument("--M", type=int, help="signal samples per time step")
    hp.add_argument("--T", type=int, help="time steps per episode")
    hp.add_argument("--gamma", type=float, help="discount factor")
    hp.add_argument("--n", type=int, help="minibatch size")
    hp.add_argument("--N-mem", type=int, dest="N_mem", help="replay memory capacity")
    hp.add_argument("--e-max", type=int, dest="e_max", help="training epochs")
    hp.add_argument("--epsilon", type=float, help="initial exploration noise std")
    hp.add_argument("--rho", type=float, help="target network update rate")
    hp.add_argument("--E", type=int, help="epochs between actor aggregations")
    hp.add_argument("--lambda", type=float, dest="lam", help="mask threshold")
    sc = sub.add_argument_group("scenario")
    sc.add_argument("--alice-node", help="node id observed by Alice")
    sc.add_argument("--bob-node", help="node id observed by Bob")
    sc.add_argument("--eve-node", help="node id observed by Eve")
    sy = sub.add_argument_group("synthetic signals")
    sy.add_argument("--period", type=float, help="waveform period in samples")
    sy.add_argument("--amplitude", type=float, help="waveform amplitude")
    sy.add_argument("--sigma-shared", type=float, help="shared random-walk step std")
    sy.add_argument("--sigma-local", type=float, help="per-node independent noise std")
    sy.add_argument(
        "--eve-decorrelation", type=float, help="0 = Eve sees the shared signal, 1 = unrelated"
    )


_TRAIN_FLAG_KEYS = (
    ("M", "M"),
    ("T", "T"),
    ("gamma", "gamma"),
    ("n", "n"),
    ("N_mem", "N_mem"),
    ("e_max", "e_max"),
    ("epsilon", "epsilon"),
    ("rho", "rho"),
    ("E", "E"),
    ("lam", "lambda"),
)
_SCENARIO_FLAG_KEYS = ("alice_node", "bob_node", "eve_node")
_SYNTH_FLAG_KEYS = ("period", "amplitude", "sigma_shared", "sigma_local", "eve_decorrelation")


def _effective_config(args) -> RunConfig:
    """Compose file config with flag overrides; env seed wins over both."""
    if getattr(args, "config", None):
        with open(args.config) as fh:
            doc = loads(fh.read())
    else:
        doc = {}
    for dest, key in _TRAIN_FLAG_KEYS:
        value = getattr(args, dest, None)
        if value is not None:
            doc[key] = value
    for dest in ("seed", "output_dir", "federated_dir", "checkpoint_every", "eval_episodes"):
        value = getattr(args, dest, None)
        if value is not None:
            doc[dest] = value
    for dest in _SCENARIO_FLAG_KEYS:
        value = getattr(args, dest, None)
        if value is not None:
            doc.setdefault("scenario", {})[dest] = value
    for dest in _SYNTH_FLAG_KEYS:
        value = getattr(args, dest, None)
        if value is not None:
            doc.setdefault("synth", {})[dest] = value
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            doc["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"${SEED_ENV_VAR} must be an integer, got {env_seed!r}") from None
    return from_doc(doc)


def _prepare_output_dir(cfg: RunConfig) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    save_config(cfg, os.path.join(cfg.output_dir, "config.toml"))
    return cfg.output_dir


def _episode_traces(cfg: RunConfig, seed) -> dict[str, signals.PressureTrace]:
    return signals.synth_traces(cfg.scenario, cfg.synth, seed)


def _load_or_synth(cfg: RunConfig, traces_path):
    if traces_path:
        traces = signals.load_traces(traces_path, cfg.scenario)
    else:
        trace_seed = np.random.SeedSequence(cfg.seed).spawn(3)[2]
        traces = _episode_traces(cfg, trace_seed)
    scenario = cfg.scenario.with_normalization(traces)
    return traces, scenario


def cmd_simulate(cfg: RunConfig, args) -> int:
    """Generate synthetic traces and write them as a trace CSV."""
    out_dir = _prepare_output_dir(cfg)
    traces = _episode_traces(cfg, cfg.seed)
    path = os.path.join(out_dir, "traces.csv")
    signals.write_traces(path, traces)
    print(f"wrote {path}")
    for node in sorted(traces):
        s = traces[node].samples
        print(
            f"node {node}: {s.size} samples, mean={s.mean():.4f}, "
            f"min={s.min():.4f}, max={s.max():.4f}"
        )
    return EXIT_OK


def _save_checkpoint(out_dir, epoch, controller, agent_a, agent_b) -> None:
    ck = os.path.join(out_dir, "checkpoint")
    os.makedirs(ck, exist_ok=True)
    for name, net in (
        ("actor_A", agent_a.actor),
        ("actor_B", agent_b.actor),
        ("critic_A", agent_a.critic),
        ("critic_B", agent_b.critic),
        ("target_actor_A", agent_a.target_actor),
        ("target_actor_B", agent_b.target_actor),
        ("target_critic_A", agent_a.target_critic),
        ("target_critic_B", agent_b.target_critic),
    ):
        nn.save(net, os.path.join(ck, f"{name}.bin"))
    state = {
        "epoch": epoch,
        "round": controller.round,
        "noise_scale_a": agent_a.noise_scale,
        "noise_scale_b": agent_b.noise_scale,
    }
    with open(os.path.join(ck, "state.toml"), "w") as fh:
        fh.write(dumps(state))


def _load_checkpoint(ck_dir, cfg: RunConfig):
    """Rebuild controller and agents from a checkpoint directory.

    Optimizer moments and replay contents are not checkpointed; a resumed
    run restarts them fresh while continuing epoch numbering and noise.
    """
    with open(os.path.join(ck_dir, "state.toml")) as fh:
        state = loads(fh.read())
    nets = {
        name: nn.load(os.path.join(ck_dir, f"{name}.bin"))
        for name in (
            "actor_A", "actor_B", "critic_A", "critic_B",
            "target_actor_A", "target_actor_B", "target_critic_A", "target_critic_B",
        )
    }
    agents = {}
    for party in ("A", "B"):
        actor = nets[f"actor_{party}"]
        critic = nets[f"critic_{party}"]
        agents[party] = federated.Agent(
            agent_id=party,
            actor=actor,
            critic=critic,
            target_actor=nets[f"target_actor_{party}"],
            target_critic=nets[f"target_critic_{party}"],
            actor_opt=nn.AdamState.for_net(actor, cfg.train.actor_lr),
            critic_opt=nn.AdamState.for_net(critic, cfg.train.critic_lr),
            noise_scale=float(state[f"noise_scale_{party.lower()}"]),
            noise_decay=cfg.train.noise_decay,
            noise_min=cfg.train.noise_min,
        )
    controller = federated.Controller(
        global_actor=nets["actor_A"].copy(),
        E=cfg.train.E,
        round=int(state["round"]),
        spool_dir=cfg.federated_dir,
    )
    return controller, agents["A"], agents["B"], int(state["epoch"])


def cmd_train(cfg: RunConfig, args) -> int:
    """Train both agents, streaming metrics and checkpointing periodically."""
    out_dir = _prepare_output_dir(cfg)
    if cfg.federated_dir:
        os.makedirs(cfg.federated_dir, exist_ok=True)
    traces, scenario = _load_or_synth(cfg, args.traces)

    if args.resume:
        controller, agent_a, agent_b, done_epoch = _load_checkpoint(args.resume, cfg)
        start_epoch = done_epoch + 1
        if start_epoch > cfg.train.e_max:
            print(f"checkpoint already at epoch {done_epoch}, nothing to do")
            return EXIT_OK
        env = marl_env.Env(traces, scenario, cfg.train.lam)
        memory = marl_env.ReplayMemory(cfg.train.N_mem, 2 * cfg.train.M)
        rng = np.random.default_rng(
            np.random.SeedSequence([0 if cfg.seed is None else cfg.seed, start_epoch])
        )
    else:
        controller, agent_a, agent_b, env, memory, rng = federated.build_run(
            traces, scenario, cfg.train, cfg.seed, cfg.federated_dir
        )
        start_epoch = 1

    metrics_path = os.path.join(out_dir, "metrics.csv")
    append = args.resume is not None and os.path.exists(metrics_path)
    metrics_file = open(metrics_path, "a" if append else "w")
    try:
        if not append:
            metrics_file.write(marl_env.EpochMetrics.CSV_HEADER + "\n")

        def progress(metrics):
            metrics_file.write(metrics.csv_row() + "\n")
            metrics_file.flush()
            if metrics.epoch % 100 == 0 or metrics.epoch == cfg.train.e_max:
                print(
                    f"epoch {metrics.epoch}/{cfg.train.e_max} "
                    f"mean_reward={metrics.mean_reward:.3f} kar={metrics.mean_kar:.3f} "
                    f"util={metrics.mask_utilization:.3f} noise={metrics.noise_scale:.4f}",
                    file=sys.stderr,
                )
            if metrics.epoch % cfg.checkpoint_period == 0:
                _save_checkpoint(out_dir, metrics.epoch, controller, agent_a, agent_b)

        federated.train_loop(
            controller, agent_a, agent_b, env, memory, cfg.train, rng,
            start_epoch=start_epoch, progress=progress,
        )
    finally:
        metrics_file.close()

    for name, net in (
        ("actor_A", agent_a.actor),
        ("actor_B", agent_b.actor),
        ("critic_A", agent_a.critic),
        ("critic_B", agent_b.critic),
        ("global_actor", controller.global_actor),
    ):
        nn.save(net, os.path.join(out_dir, f"{name}.bin"))
    _save_checkpoint(out_dir, cfg.train.e_max, controller, agent_a, agent_b)
    print(f"training complete; models and metrics in {out_dir}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, args) -> int:
    """Evaluate trained actors over fresh episodes; export reports and keys."""
    out_dir = _prepare_output_dir(cfg)
    models_dir = args.models or out_dir
    actor_a = nn.load(os.path.join(models_dir, "actor_A.bin"))
    actor_b = nn.load(os.path.join(models_dir, "actor_B.bin"))

    if args.traces:
        episode_seeds = [None]
    else:
        episode_seeds = np.random.SeedSequence(cfg.seed).spawn(3 + cfg.eval_episodes)[3:]

    reports = []
    for ep_seed in episode_seeds:
        if args.traces:
            traces = signals.load_traces(args.traces, cfg.scenario)
        else:
            traces = _episode_traces(cfg, ep_seed)
        scenario = cfg.scenario.with_normalization(traces)
        adversary = evaluation.AdversaryModel(
            eve_actor=actor_b.copy(), eve_trace=traces[scenario.eve_node]
        )
        reports.append(
            evaluation.evaluate_episode(
                actor_a, actor_b, adversary, traces, scenario, cfg.train.lam
            )
        )

    gaps = [evaluation.kar_gap(r) for r in reports]
    all_ts_gaps = [g for gg in gaps for g in gg["per_ts_gaps"]]
    summary = {
        "episodes": len(reports),
        "T": cfg.train.T,
        "M": cfg.train.M,
        "mean_kar_ab": float(np.mean([r.mean_kar_ab for r in reports])),
        "mean_kar_ae": float(np.mean([r.mean_kar_ae for r in reports])),
        "mean_gap": float(np.mean(all_ts_gaps)),
        "min_gap": float(np.min(all_ts_gaps)),
        "mask_utilization": float(np.mean([r.mask_utilization for r in reports])),
        "uniqueness": float(np.mean([r.uniqueness for r in reports])),
        "keystream_bits": int(sum(r.T * cfg.train.M for r in reports)),
        "per_episode": [json.loads(r.to_json()) for r in reports],
    }
    with open(os.path.join(out_dir, "eval_report.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    with open(os.path.join(out_dir, "eval_report.csv"), "w") as fh:
        fh.write("episode,ts,kar_ab,kar_ae,gap\n")
        for ep, report in enumerate(reports, start=1):
            for t, (ab, ae) in enumerate(zip(report.kar_ab, report.kar_ae), start=1):
                fh.write(f"{ep},{t},{ab:.10g},{ae:.10g},{ab - ae:.10g}\n")
    for owner in ("A", "B", "E"):
        stream = evaluation.export_keystream(reports, owner)
        randomness.write_bitstream(os.path.join(out_dir, f"keystream_{owner}.txt"), stream)
        keys = [k for r in reports for k in getattr(r, f"keys_{owner.lower()}")]
        keygen.write_keys(os.path.join(out_dir, f"keys_{owner}.txt"), keys)

    print(
        f"evaluated {summary['episodes']} episodes: "
        f"KAR(A,B)={summary['mean_kar_ab']:.4f} KAR(A,E)={summary['mean_kar_ae']:.4f} "
        f"gap={summary['mean_gap']:.4f}"
    )
    print(f"reports and keystreams in {out_dir}")
    return EXIT_OK


def cmd_nist(cfg: RunConfig, args) -> int:
    """Run the statistical suite on a bitstream file; non-zero exit on failure."""
    bits = randomness.read_bitstream(args.bitstream)
    reports = randomness.run_suite(bits)
    csv_text = randomness.suite_csv(reports)
    sys.stdout.write(csv_text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(csv_text)
    applicable = [r for r in reports if r.applicable]
    if not applicable:
        print("no test was applicable to this sequence", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if all(r.passed for r in applicable):
        return EXIT_OK
    failed = ", ".join(r.test_name for r in applicable if not r.passed)
    print(f"failed tests: {failed}", file=sys.stderr)
    return EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fd2k",
        description="Distributed key generation from correlated physical signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate synthetic traces", parents=[])
    _add_config_flags(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="train the two agents")
    _add_config_flags(p_train)
    p_train.add_argument("--traces", metavar="FILE", help="trace CSV instead of synthesis")
    p_train.add_argument("--resume", metavar="DIR", help="checkpoint directory to resume from")
    p_train.add_argument(
        "--federated-dir", metavar="DIR", dest="federated_dir",
        help="exchange actor models through this spool directory",
    )
    p_train.add_argument(
        "--checkpoint-every", type=int, dest="checkpoint_every", metavar="EPOCHS",
        help="checkpoint cadence (default: every aggregation round)",
    )
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate trained actors")
    _add_config_flags(p_eval)
    p_eval.add_argument("--models", metavar="DIR", help="directory with actor_A.bin/actor_B.bin")
    p_eval.add_argument("--traces", metavar="FILE", help="trace CSV instead of synthesis")
    p_eval.add_argument(
        "--eval-episodes", type=int, dest="eval_episodes", metavar="K",
        help="number of evaluation episodes",
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_nist = sub.add_parser("nist", help="statistical test suite on a bitstream")
    p_nist.add_argument("bitstream", help="ASCII '0'/'1' file")
    p_nist.add_argument("--output", metavar="FILE", help="also write the report CSV here")
    p_nist.set_defaults(func=cmd_nist, config=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.func is cmd_nist:
            cfg = default_config()
        else:
            cfg = _effective_config(args)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
