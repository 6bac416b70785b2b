"""Experiment orchestration: configs, seeded runs, evaluation, aggregation, CSV output."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import Agent, AgentConfig, NoiseConfig
from .envs import ENVS, ContinuousEnv, make_env
from .errors import ConfigurationError, UsageError
from .mdp import MdpSpec, make_random_mdp
from .regularizers import KINDS, RegularizerKind
from .replay import ReplayBuffer, Transition
from .tabular import run_convergence

log = logging.getLogger(__name__)

# fixed offsets that derive each component's generator from the master seed
STREAMS = {"env": 0, "explore": 1, "smoothing": 2, "replay": 3, "eval": 4, "init": 5, "tabular": 6}

PRESETS = {
    "desk": {},
    "paper-protocol": {
        "total_steps": 1_000_000,
        "eval_every": 5000,
        "eval_episodes": 10,
        "seeds": [0, 1, 2, 3, 4],
        "batch_size": 128,
        "window": 5,
        "final_k": 10,
    },
}


@dataclass
class ExperimentConfig:
    task: str = "pendulum"
    regularizer: str = "tddr"
    nu: float = 0.1
    lam: float = 0.005
    tddr_compare: str = "sample"
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    total_steps: int = 30_000
    eval_every: int = 1000
    eval_episodes: int = 10
    batch_size: int = 128
    warmup: int = 1000
    replay_capacity: int = 100_000
    hidden: list[int] = field(default_factory=lambda: [256, 256])
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    explore_noise: float | None = None  # default: 0.1 * action bound
    smoothing_sigma: float | None = None  # default: 0 for ddpg, 0.2 otherwise
    noise_clip: float = 0.5
    mode: str = "cross"
    policy_delay: int | None = None  # default: 2 for td3, 1 otherwise
    eval_single_actor: bool = False
    window: int = 5
    final_k: int = 10
    # tabular tasks ("mdp:<path>" or "mdp:random:S,A,seed")
    pattern: str = "random"
    selector: str = "tddr"
    scheme: str = "min"
    omega: float = 0.8
    mdp_gamma: float = 0.9
    jobs: int = 1
    out: str = "runs"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.seeds or len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError(f"seeds must be non-empty and distinct, got {self.seeds}")
        if self.eval_every <= 0:
            raise ConfigurationError("eval_every must be positive")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be at least 1")
        if self.eval_episodes < 1:
            raise ConfigurationError("eval_episodes must be at least 1")
        if self.total_steps < 0 or self.warmup < 0:
            raise ConfigurationError("total_steps and warmup must be non-negative")
        if self.regularizer not in KINDS:
            raise ConfigurationError(f"unknown regularizer {self.regularizer!r}; choose from {KINDS}")
        if not self.is_tabular and self.task not in ENVS:
            raise ConfigurationError(f"unknown task {self.task!r}; choose from {sorted(ENVS)} or mdp:...")
        if self.window < 1 or self.final_k < 1:
            raise ConfigurationError("window and final_k must be positive")

    @property
    def is_tabular(self) -> bool:
        return self.task.startswith("mdp:")

    def kind(self) -> RegularizerKind:
        return RegularizerKind.make(self.regularizer, nu=self.nu, lam=self.lam,
                                    compare=self.tddr_compare)

    def agent_config(self, env: ContinuousEnv) -> AgentConfig:
        bound = env.action_bound
        explore = 0.1 * bound if self.explore_noise is None else self.explore_noise
        sigma = self.smoothing_sigma
        if sigma is None:
            sigma = 0.0 if self.regularizer == "ddpg" else 0.2
        delay = self.policy_delay
        if delay is None:
            delay = 2 if self.regularizer == "td3" else 1
        return AgentConfig(
            obs_dim=env.obs_dim, act_dim=env.act_dim, action_bound=bound, kind=self.kind(),
            hidden=tuple(self.hidden), actor_lr=self.actor_lr, critic_lr=self.critic_lr,
            gamma=self.gamma, tau=self.tau,
            noise=NoiseConfig(explore=explore, sigma=sigma, clip=self.noise_clip),
            mode=self.mode, policy_delay=delay)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Digest of every setting that can influence results (not ``out`` or ``jobs``)."""
        d = self.to_dict()
        d.pop("out")
        d.pop("jobs")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _coerce(name: str, raw: str):
    ftype = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}[name]
    raw = raw.strip()
    if raw.lower() in ("none", "") and "None" in ftype:
        return None
    if ftype.startswith("list[int]"):
        return [int(x) for x in raw.replace(" ", "").split(",") if x]
    if ftype.startswith("bool"):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigurationError(f"{name} expects a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if ftype.startswith("int"):
        return int(float(raw)) if "e" in raw.lower() else int(raw)
    if ftype.startswith("float"):
        return float(raw)
    return raw


def parse_overrides(pairs: dict[str, str]) -> dict:
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    out = {}
    for key, raw in pairs.items():
        key = key.strip().replace("-", "_")
        if key == "preset":
            continue
        if key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            out[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r} ({exc})") from None
    return out


def load_config(path=None, overrides: dict | None = None,
                preset: str | None = None) -> ExperimentConfig:
    """Read an INI-style ``key = value`` file (any sections) and build a config.

    Precedence, lowest first: preset (``preset`` argument, else the file's
    ``preset = ...`` key, else ``desk``), file values, ``overrides``.
    """
    values: dict[str, str] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        parser.read_string(_with_default_section(path.read_text()))
        for section in [parser.default_section, *parser.sections()]:
            values.update(parser[section])
    preset = preset or values.get("preset", "desk").strip()
    if preset not in PRESETS:
        raise ConfigurationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    merged = dict(PRESETS[preset])
    merged.update(parse_overrides(values))
    merged.update(overrides or {})
    return ExperimentConfig.from_dict(merged)


def _with_default_section(text: str) -> str:
    # allow flat files without any [section] header
    first = next((ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith(("#", ";"))), "")
    return text if first.startswith("[") else "[DEFAULT]\n" + text


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[name]])


@dataclass
class RunRecord:
    seed: int
    steps: list[int]
    values: list[float]  # mean evaluation return, or |Q^A - Q*| for tabular runs
    config_hash: str
    wall_clock: float = 0.0
    status: str = "ok"
    diagnostic: str = ""
    rows: list[dict] | None = None  # full convergence trace for tabular runs
    param_digest: str = ""


def evaluate(agent: Agent, env: ContinuousEnv, episodes: int, rng: np.random.Generator,
             single_actor: bool = False) -> float:
    """Mean undiscounted return of the noise-free behavior policy."""
    if episodes < 1:
        raise UsageError("episodes must be at least 1")
    total = 0.0
    for _ in range(episodes):
        s = env.reset(seed=int(rng.integers(2**31)))
        done = False
        while not done:
            a = agent.select_action(s, None, explore=0.0, single_actor=single_actor)
            res = env.step(a)
            total += res.reward
            s, done = res.next_state, res.done
    return total / episodes


def _param_digest(agent: Agent) -> str:
    h = hashlib.sha256()
    for name, arr in sorted(agent.state_arrays().items()):
        h.update(name.encode())
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def train_agent(cfg: ExperimentConfig, seed: int) -> tuple[RunRecord, Agent]:
    """One seeded training run of a deep agent."""
    start = time.perf_counter()
    env, eval_env = make_env(cfg.task), make_env(cfg.task)
    rngs = {name: stream(seed, name) for name in STREAMS}
    agent = Agent(cfg.agent_config(env), rngs["init"])
    buffer = ReplayBuffer(env.obs_dim, env.act_dim, cfg.replay_capacity)
    record = RunRecord(seed, [], [], cfg.hash())

    def checkpoint(t: int) -> None:
        record.steps.append(t)
        record.values.append(evaluate(agent, eval_env, cfg.eval_episodes, rngs["eval"],
                                      cfg.eval_single_actor))

    def sample():
        return buffer.sample(cfg.batch_size, rngs["replay"])

    checkpoint(0)
    s = env.reset(seed=int(rngs["env"].integers(2**31)))
    for t in range(1, cfg.total_steps + 1):
        if t <= cfg.warmup:
            a = rngs["explore"].uniform(-env.action_bound, env.action_bound, size=env.act_dim)
        else:
            a = agent.select_action(s, rngs["explore"])
        res = env.step(a)
        buffer.push(Transition(s, a, res.reward, res.next_state, res.done and not res.truncated))
        s = res.next_state
        if res.done:
            s = env.reset(seed=int(rngs["env"].integers(2**31)))
        if t > cfg.warmup:
            losses = agent.train_step(sample, rngs["smoothing"])
            bad = [k for k, v in losses.items() if not np.isfinite(v)]
            if bad:
                record.status = "nan_abort"
                record.diagnostic = f"non-finite loss in {', '.join(bad)} at step {t}"
                log.error("seed %d: %s", seed, record.diagnostic)
                break
        if t % cfg.eval_every == 0:
            checkpoint(t)
    record.wall_clock = time.perf_counter() - start
    record.param_digest = _param_digest(agent)
    return record, agent


def parse_mdp_ref(ref: str, gamma: float = 0.9) -> MdpSpec:
    """``random:S,A,seed`` builds a random MDP; anything else is a JSON file path."""
    ref = ref[4:] if ref.startswith("mdp:") else ref
    if ref.startswith("random:"):
        try:
            S, A, seed = (int(x) for x in ref[len("random:"):].split(","))
        except ValueError:
            raise ConfigurationError(f"expected random:S,A,seed, got {ref!r}") from None
        return make_random_mdp(S, A, seed, gamma=gamma)
    path = Path(ref)
    if not path.exists():
        raise ConfigurationError(f"MDP file not found: {path}")
    return MdpSpec.load(path)


def converge_run(cfg: ExperimentConfig, seed: int) -> RunRecord:
    start = time.perf_counter()
    mdp = parse_mdp_ref(cfg.task, cfg.mdp_gamma)
    trace = run_convergence(mdp, cfg.pattern, cfg.selector, cfg.total_steps, seed,
                            cfg.eval_every, cfg.omega, cfg.scheme)
    return RunRecord(seed, trace.column("step").astype(int).tolist(),
                     trace.column("deltaA_inf").tolist(), cfg.hash(),
                     time.perf_counter() - start, rows=trace.rows)


def run_single(cfg: ExperimentConfig, seed: int) -> RunRecord:
    if cfg.is_tabular:
        return converge_run(cfg, seed)
    return train_agent(cfg, seed)[0]


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """One record per seed; seeds run in parallel when ``cfg.jobs > 1``."""
    cfg.validate()
    if cfg.jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(run_single, [cfg] * len(cfg.seeds), cfg.seeds))
    return [run_single(cfg, seed) for seed in cfg.seeds]


@dataclass
class AggregateReport:
    steps: list[int]
    mean: list[float]
    std: list[float]
    smoothed: list[float]
    final_mean: float
    final_std: float
    window: int = 5
    final_k: int = 10
    seeds: list[int] = field(default_factory=list)


def trailing_mean(values, window: int) -> list[float]:
    """Mean of the last ``window`` values up to and including each index."""
    values = list(values)
    return [float(np.mean(values[max(0, k - window + 1):k + 1])) for k in range(len(values))]


def aggregate(records: list[RunRecord], window: int = 5, final_k: int = 10) -> AggregateReport:
    if not records:
        return AggregateReport([], [], [], [], float("nan"), float("nan"), window, final_k)
    records = sorted(records, key=lambda r: r.seed)
    steps = records[0].steps
    for r in records[1:]:
        if r.steps != steps:
            raise UsageError(f"seed {r.seed} has different checkpoints from seed {records[0].seed}")
    values = np.array([r.values for r in records], dtype=np.float64)
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    per_seed_final = values[:, -final_k:].mean(axis=1)
    return AggregateReport(list(steps), mean.tolist(), std.tolist(), trailing_mean(mean, window),
                           float(per_seed_final.mean()), float(per_seed_final.std()),
                           window, final_k, [r.seed for r in records])


def _fmt(x: float) -> str:
    return repr(float(x))


def write_seed_csv(record: RunRecord, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if record.rows is not None:
            fields = list(record.rows[0]) if record.rows else ["step", "deltaA_inf"]
            w.writerow(fields)
            for row in record.rows:
                w.writerow([row[k] if k == "step" else _fmt(row[k]) for k in fields])
        else:
            w.writerow(["step", "return"])
            for step, v in zip(record.steps, record.values):
                w.writerow([step, _fmt(v)])


def write_aggregate_csv(report: AggregateReport, path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "mean", "std", "smoothed"])
        for row in zip(report.steps, report.mean, report.std, report.smoothed):
            w.writerow([row[0], *map(_fmt, row[1:])])


def read_aggregate_csv(path) -> AggregateReport:
    steps, mean, std, smoothed = [], [], [], []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            steps.append(int(row["step"]))
            mean.append(float(row["mean"]))
            std.append(float(row["std"]))
            smoothed.append(float(row["smoothed"]))
    return AggregateReport(steps, mean, std, smoothed, float("nan"), float("nan"))


def read_seed_csv(path) -> RunRecord:
    path = Path(path)
    seed = int(path.stem.split("_")[-1])
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    value_key = "return" if rows and "return" in rows[0] else "deltaA_inf"
    return RunRecord(seed, [int(r["step"]) for r in rows], [float(r[value_key]) for r in rows], "")


def emit(report: AggregateReport, records: list[RunRecord], out_dir,
         cfg: ExperimentConfig | None = None) -> Path:
    """Write ``seed_<n>.csv`` per record, ``aggregate.csv``, ``summary.json`` and
    (when ``cfg`` is given) ``config.json``. Existing files are overwritten."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for record in records:
            write_seed_csv(record, out / f"seed_{record.seed}.csv")
        write_aggregate_csv(report, out / "aggregate.csv")
        summary = {
            "final_mean": report.final_mean,
            "final_std": report.final_std,
            "final_k": report.final_k,
            "window": report.window,
            "seeds": report.seeds,
            "runs": [{"seed": r.seed, "status": r.status, "diagnostic": r.diagnostic,
                      "config_hash": r.config_hash, "wall_clock": r.wall_clock,
                      "param_digest": r.param_digest} for r in records],
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        if cfg is not None:
            snapshot = {"config_hash": cfg.hash(), "config": cfg.to_dict()}
            (out / "config.json").write_text(json.dumps(snapshot, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing results to {out}: {exc}") from exc
    return out


def aggregate_dir(in_dir, window: int = 5, final_k: int = 10) -> AggregateReport:
    """Re-aggregate the per-seed CSVs found in ``in_dir`` into ``aggregate.csv``."""
    in_dir = Path(in_dir)
    paths = sorted(in_dir.glob("seed_*.csv"))
    if not paths:
        raise UsageError(f"no seed_*.csv files in {in_dir}")
    records = [read_seed_csv(p) for p in paths]
    report = aggregate(records, window, final_k)
    write_aggregate_csv(report, in_dir / "aggregate.csv")
    return report


def random_policy_returns(task: str, episodes: int = 100, seed: int = 12345) -> list[float]:
    """Undiscounted returns of uniformly random actions, one per episode."""
    env = make_env(task)
    rng = np.random.default_rng(seed)
    returns = []
    for _ in range(episodes):
        env.reset(seed=int(rng.integers(2**31)))
        total, done = 0.0, False
        while not done:
            res = env.step(rng.uniform(-env.action_bound, env.action_bound, size=env.act_dim))
            total += res.reward
            done = res.done
        returns.append(total)
    return returns


def random_policy_baseline(task: str, episodes: int = 100, seed: int = 12345) -> float:
    """Mean random-policy return; the learning smoke test compares against it."""
    return float(np.mean(random_policy_returns(task, episodes, seed)))
