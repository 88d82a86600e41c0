"""Simulation configuration: defaults, INI file loading, validation.

Defaults reproduce the reference parameter set: scheduling rate 50 work/s,
quantum scale 1 (quantum of node i = rep_i / total rep), deficit cap 1,
rate setter (increase 0.075, decrease 0.7, pause 2 s, backlog threshold 2),
inbox capacity 200 work, channel delay means uniform on [50, 150] ms with
20 ms per-transaction jitter.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from .core import BestEffort, Content, DomainError, Inactive, Malicious


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass
class ModeSwitch:
    """Scripted event: at ``time`` the node starts operating in ``mode``."""
    time: float
    node: int
    mode: object


@dataclass
class SimConfig:
    # [network]
    node_count: int = 50
    neighbour_count: int = 4
    topology: str = "regular"          # "regular" | "union4"
    duration: float = 180.0
    access_control: str = "acc"        # "acc" | "pow"

    # [reputation]
    zipf_exponent: float = 0.9
    # Total reputation mass, in transaction-count-like units.  Every formula
    # except the rate setter's backlog threshold uses reputation shares, so
    # this sets the scale of W * rep_m; the default keeps each node's
    # threshold above one unit of work.  None keeps raw zipf rank weights.
    reputation_total: float | None = 350.0
    explicit_reputations: list | None = None

    # [scheduler]
    scheduling_rate: float = 50.0      # work per second every node sustains
    quantum_scale: float = 1.0         # sum of quanta per round-robin cycle
    deficit_cap: float = 1.0
    idle_cadence: float = 0.01         # seconds between idle accrual cycles
    empty_queue_accrual: bool = True   # False emulates standard DRR

    # [rate_setter]
    rate_increase: float = 0.075       # global additive increase budget
    rate_decrease: float = 0.7         # multiplicative decrease factor
    pause_seconds: float = 2.0
    backlog_threshold: float = 2.0     # own-work threshold scale
    ema_coeff: float = 0.5
    threshold_on_raw_rep: bool = True  # False scales threshold by rep share

    # [buffer]
    inbox_capacity: float = 200.0

    # [delay]
    delay_mean_low: float = 0.05
    delay_mean_high: float = 0.15
    delay_jitter_std: float = 0.02
    delay_floor: float = 0.001

    # [metrics]
    dr_window: float = 10.0
    dr_stride: float = 1.0
    sample_cadence: float = 0.0        # 0 disables periodic sampling

    # [modes]
    mode_layout: str = "thirds"        # "thirds" | "explicit"
    content_fraction: float = 0.5      # content rate as a fraction of assured
    malicious_multiplier: float = 10.0
    malicious_nodes: list = field(default_factory=list)
    malicious_start: float = 60.0      # attack onset (s); 0 = from the start

    # [work]
    work_kind: str = "fixed"           # "fixed" | "uniform"
    work_low: float = 1.0
    work_high: float = 1.0
    iot_ids: list = field(default_factory=list)   # ids with uniform work
    iot_low: float = 0.25
    iot_high: float = 0.75

    # [pow]
    pow_scale: float = 1.0
    pow_stochastic: bool = False
    pow_inactive: list = field(default_factory=list)

    # engine details
    drr_idle_skip: bool = True
    monte_carlo_runs: int = 20
    seed: int = 0

    # resolved per-node structure (filled by scenarios; not file-loadable)
    modes: list | None = None
    switches: list = field(default_factory=list)

    def validate(self) -> "SimConfig":
        c = self
        checks = [
            (c.node_count >= 1, "node_count must be >= 1"),
            (c.neighbour_count >= 0, "neighbour_count must be >= 0"),
            (c.node_count > c.neighbour_count,
             "node_count must exceed neighbour_count"),
            (c.scheduling_rate > 0, "scheduling_rate must be > 0"),
            (0 < c.rate_decrease < 1, "rate_decrease must lie in (0, 1)"),
            (c.rate_increase > 0, "rate_increase must be > 0"),
            (c.pause_seconds > 0, "pause_seconds must be > 0"),
            (c.backlog_threshold > 0, "backlog_threshold must be > 0"),
            (c.inbox_capacity > 0, "inbox_capacity must be > 0"),
            (c.deficit_cap > 0, "deficit_cap must be > 0"),
            (c.quantum_scale > 0, "quantum_scale must be > 0"),
            (c.idle_cadence > 0, "idle_cadence must be > 0"),
            (0 < c.ema_coeff <= 1, "ema_coeff must lie in (0, 1]"),
            (c.duration >= 0, "duration must be >= 0"),
            (c.delay_mean_low > 0, "delay_mean_low must be > 0"),
            (c.delay_mean_high >= c.delay_mean_low,
             "delay_mean_high must be >= delay_mean_low"),
            (c.delay_jitter_std >= 0, "delay_jitter_std must be >= 0"),
            (c.delay_floor > 0, "delay_floor must be > 0"),
            (c.work_low > 0 and c.work_high >= c.work_low,
             "work bounds must be positive and ordered"),
            (c.topology in ("regular", "union4"), "unknown topology model"),
            (c.access_control in ("acc", "pow"), "unknown access control"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        # a transaction heavier than the deficit cap could never be afforded
        if c.work_high > c.deficit_cap:
            raise ConfigError("work_high must not exceed deficit_cap")
        if c.node_count > 1 and c.neighbour_count == 0:
            raise ConfigError("multi-node networks need neighbour_count >= 1")
        return c


_SECTIONS = {
    "network": ["node_count", "neighbour_count", "topology", "duration",
                "access_control"],
    "reputation": ["zipf_exponent", "reputation_total", "explicit_reputations"],
    "scheduler": ["scheduling_rate", "quantum_scale", "deficit_cap",
                  "idle_cadence", "empty_queue_accrual"],
    "rate_setter": ["rate_increase", "rate_decrease", "pause_seconds",
                    "backlog_threshold", "ema_coeff", "threshold_on_raw_rep"],
    "buffer": ["inbox_capacity"],
    "delay": ["delay_mean_low", "delay_mean_high", "delay_jitter_std",
              "delay_floor"],
    "metrics": ["dr_window", "dr_stride", "sample_cadence"],
    "modes": ["mode_layout", "content_fraction", "malicious_multiplier",
              "malicious_nodes", "malicious_start"],
    "work": ["work_kind", "work_low", "work_high", "iot_ids", "iot_low",
             "iot_high"],
    "pow": ["pow_scale", "pow_stochastic", "pow_inactive"],
    "run": ["monte_carlo_runs", "seed", "drr_idle_skip"],
}

_FIELD_SECTION = {name: sec for sec, names in _SECTIONS.items() for name in names}


_HINTS = None


def _coerce(name: str, raw: str):
    global _HINTS
    if _HINTS is None:
        _HINTS = {f.name: f.type for f in fields(SimConfig)}
    raw = raw.strip()
    hint = _HINTS[name]
    if raw == "" and hint.startswith("list"):
        return []
    if raw.lower() in ("none", ""):
        return None
    if hint == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if hint == "int":
            return int(raw)
        if hint.startswith("float"):
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"{name}: {e}") from e
    if hint.startswith("list"):
        parts = [p for p in raw.replace(",", " ").split() if p]
        out = []
        for p in parts:
            out.append(float(p) if ("." in p or "e" in p.lower()) else int(p))
        return out
    return raw


def load_config(path: str, base: SimConfig | None = None) -> SimConfig:
    """Read an INI file with the sections documented in the README and merge
    it over ``base`` (or the defaults)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = base if base is not None else SimConfig()
    updates = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            updates[key] = _coerce(key, raw)
    return replace(cfg, **updates).validate()


def apply_overrides(cfg: SimConfig, pairs: list[str]) -> SimConfig:
    """Apply CLI ``--set key=value`` (or ``section.key=value``) overrides."""
    updates = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, raw = pair.split("=", 1)
        key = key.strip().split(".")[-1]
        if key not in _FIELD_SECTION:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _coerce(key, raw)
    return replace(cfg, **updates).validate()


def dump_config(cfg: SimConfig) -> str:
    """Render the resolved configuration back to INI text."""
    lines = []
    for section, names in _SECTIONS.items():
        lines.append(f"[{section}]")
        for name in names:
            value = getattr(cfg, name)
            if isinstance(value, list):
                value = " ".join(str(v) for v in value)
            lines.append(f"{name} = {value}")
        lines.append("")
    return "\n".join(lines)


def resolve_modes(cfg: SimConfig, reps, nu: float) -> list:
    """Turn the configured layout into one mode per node.

    The "thirds" layout cycles content / best-effort / inactive down the
    reputation ranking, then flips any ids listed in ``malicious_nodes`` to
    malicious.  This approximates the published experiment layouts and is
    fully overridable via ``cfg.modes``.
    """
    from .core import assured_rate, validate_mode

    if cfg.modes is not None:
        modes = list(cfg.modes)
        if len(modes) != cfg.node_count:
            raise ConfigError("explicit modes must cover every node")
    elif cfg.mode_layout == "thirds":
        modes = []
        for m in range(cfg.node_count):
            slot = m % 3
            if slot == 0:
                modes.append(Content(cfg.content_fraction *
                                     assured_rate(m, reps, nu)))
            elif slot == 1:
                modes.append(BestEffort())
            else:
                modes.append(Inactive())
    elif cfg.mode_layout == "halves":
        # no inactive nodes: the network is demand-saturated from the start
        modes = []
        for m in range(cfg.node_count):
            if m % 2 == 0:
                modes.append(Content(cfg.content_fraction *
                                     assured_rate(m, reps, nu)))
            else:
                modes.append(BestEffort())
    else:
        raise ConfigError(f"unknown mode layout {cfg.mode_layout!r}")
    for m in cfg.malicious_nodes:
        if not 0 <= m < cfg.node_count:
            raise ConfigError(f"malicious node id {m} out of range")
        modes[m] = Malicious(cfg.malicious_multiplier)
    for m, mode in enumerate(modes):
        try:
            validate_mode(mode, m, reps, nu)
        except DomainError as e:
            raise ConfigError(str(e)) from e
    return modes
