"""Run configuration and its flat ``section.key = value`` file format.

Blank lines and ``#`` comments are ignored. List values are comma-separated.
Any key not listed in ``DEFAULTS`` is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import ConfigError
from ..model import ModelParams
from ..policies import PolicySpec, StoppingSpec, TargetSpec
from ..simulator import OutcomeLaw
from ..stochastics import GibbsConfig

PROCEDURES = ("last_only", "leftover", "zjm", "polyhedral")

DEFAULTS: dict[str, str] = {
    "model.mu": "0,0,0",
    "model.sigma2": "1,1,1",
    "model.batch_sizes": "200,200,200,200",
    "outcome.kind": "rademacher_shifted",
    "outcome.sd": "",
    "policy.kind": "thompson",
    "policy.prune_eps": "0.01",
    "policy.greedy_eps": "0.1",
    "policy.pi1": "",
    "policy.orthant_draws": "8192",
    "stopping.kind": "fixed_horizon",
    "stopping.horizon": "4",
    "target.kind": "fixed_arm",
    "target.arm": "3",
    "run.mode": "finite",
    "run.procedures": "last_only,leftover,zjm",
    "run.alpha": "0.05",
    "run.reps": "10000",
    "run.seed": "0",
    "run.parallel": "1",
    "gibbs.n_draws": "4000",
    "gibbs.burn_in": "500",
    "gibbs.thin": "1",
    "gibbs.ess_min": "200",
    "output.dir": "out",
    "output.dump": "false",
}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    outcome: OutcomeLaw = OutcomeLaw()
    policy: PolicySpec = PolicySpec()
    stopping: StoppingSpec = StoppingSpec()
    target: TargetSpec = TargetSpec()
    procedures: tuple[str, ...] = ("last_only", "leftover", "zjm")
    alpha: float = 0.05
    reps: int = 10_000
    seed: int = 0
    mode: str = "finite"
    gibbs: GibbsConfig = field(default_factory=GibbsConfig)
    parallel: int = 1
    out_dir: str = "out"
    dump: bool = False

    def __post_init__(self):
        bad = [p for p in self.procedures if p not in PROCEDURES]
        if bad:
            raise ConfigError(f"unknown procedures {bad}")
        if not self.procedures:
            raise ConfigError("at least one procedure is required")
        if "polyhedral" in self.procedures and self.policy.kind != "egreedy":
            raise ConfigError("polyhedral inference needs the epsilon-greedy policy")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.parallel < 1:
            raise ConfigError("parallel must be at least 1")
        if self.mode not in ("exact", "finite"):
            raise ConfigError(f"run.mode must be exact or finite, got {self.mode!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _floats(s: str) -> tuple[float, ...] | None:
    s = s.strip()
    if not s:
        return None
    return tuple(float(v) for v in s.split(","))


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def build_config(values: dict[str, str]) -> RunConfig:
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    v = {**DEFAULTS, **values}
    try:
        params = ModelParams(
            mu=_floats(v["model.mu"]),
            sigma2=_floats(v["model.sigma2"]),
            batch_sizes=[int(x) for x in v["model.batch_sizes"].split(",")],
        )
        return RunConfig(
            params=params,
            outcome=OutcomeLaw(v["outcome.kind"], _floats(v["outcome.sd"])),
            policy=PolicySpec(
                kind=v["policy.kind"],
                prune_eps=float(v["policy.prune_eps"]),
                greedy_eps=float(v["policy.greedy_eps"]),
                pi1=_floats(v["policy.pi1"]),
                orthant_draws=int(v["policy.orthant_draws"]),
            ),
            stopping=StoppingSpec(v["stopping.kind"], int(v["stopping.horizon"])),
            target=TargetSpec(v["target.kind"], int(v["target.arm"])),
            procedures=tuple(p.strip() for p in v["run.procedures"].split(",") if p.strip()),
            alpha=float(v["run.alpha"]),
            reps=int(v["run.reps"]),
            seed=int(v["run.seed"]),
            mode=v["run.mode"],
            gibbs=GibbsConfig(
                int(v["gibbs.n_draws"]), int(v["gibbs.burn_in"]),
                int(v["gibbs.thin"]), float(v["gibbs.ess_min"]),
            ),
            parallel=int(v["run.parallel"]),
            out_dir=v["output.dir"],
            dump=_bool(v["output.dump"]),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    return build_config(parse_config_text(Path(path).read_text()))
