"""Scenario configuration: file format, defaults, and validation."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import yaml

from .model import SystemMatrices, ValidationError, control_cost_weight, network_system

FLUID_ATTACKS = ("A1", "A2", "A3", "A4")
FLUID_RESPONSES = ("R1", "R2", "R2D", "R3", "R4", "R5")
PACKET_SCENARIOS = ("S1", "S2", "S3", "S4", "S5")
PACKET_MODES = ("hinf", "heuristic")


@dataclass
class ScenarioConfig:
    """One batch of simulator runs.

    attacks/responses hold fluid attack and response kinds, or packet
    scenario ids and filter modes when simulator == "packet".  The control
    cost weight is g = f_l (1 - b) + f_a; the state weight is
    sqrt(cost_ratio) * g.
    """

    simulator: str = "fluid"
    attacks: list[str] = field(default_factory=lambda: ["A2"])
    responses: list[str] = field(default_factory=lambda: ["R2"])
    cost_ratio: float = 100.0
    b: float = 0.5
    f_l: float = 1.8
    f_a: float = 0.1
    n: int = 9
    a: float = -1.0
    c: float = 2.0
    seeds: list[int] = field(default_factory=lambda: [1])
    horizon: float = 50.0
    dt: float = 0.01
    interval: float = 0.5
    gamma_margin: float = 1.05
    noise_mean: float = 0.5
    noise_std: float = 0.25
    trigger_level: float = 5.0
    fixed_rate: float = 10.0
    h_boost: dict = field(default_factory=dict)
    output_dir: str = "out"
    workers: int = 1

    @property
    def g(self) -> float:
        return control_cost_weight(self.f_l, self.f_a, self.b)

    def validate(self) -> "ScenarioConfig":
        if self.simulator not in ("fluid", "packet"):
            raise ValidationError(f"simulator: unknown value {self.simulator!r}")
        if not 0 < self.b <= 1:
            raise ValidationError("b: must lie in (0, 1]; b=0 breaks the filtering channel")
        if self.cost_ratio <= 0:
            raise ValidationError("cost_ratio: must be positive")
        if self.horizon <= 0:
            raise ValidationError("horizon: must be positive")
        if self.dt <= 0 or self.interval <= 0:
            raise ValidationError("dt/interval: must be positive")
        if self.noise_mean < 0 or self.noise_std < 0:
            raise ValidationError("noise_mean/noise_std: must be nonnegative")
        if self.gamma_margin <= 1:
            raise ValidationError("gamma_margin: must exceed 1")
        kinds = FLUID_ATTACKS if self.simulator == "fluid" else PACKET_SCENARIOS
        for a in self.attacks:
            if a not in kinds:
                raise ValidationError(f"attacks: unknown entry {a!r}")
        resp = FLUID_RESPONSES if self.simulator == "fluid" else PACKET_MODES
        for r in self.responses:
            if r not in resp:
                raise ValidationError(f"responses: unknown entry {r!r}")
        for s in self.seeds:
            if not isinstance(s, int):
                raise ValidationError(f"seeds: {s!r} is not an integer")
        return self

    def system(self) -> SystemMatrices:
        boost = {int(k): float(v) for k, v in self.h_boost.items()} or None
        return network_system(n=self.n, a=self.a, b=self.b, c=self.c,
                              cost_ratio=self.cost_ratio, g=self.g, h_boost=boost)


_LIST_KEYS = {"attacks": ("attack",), "responses": ("response", "modes", "mode"),
              "seeds": ("seed",)}


def load_config(path) -> ScenarioConfig:
    """Parse and validate a config file, applying defaults for omitted fields.

    Accepts singular aliases (attack/response/seed) for the list fields.
    """
    with open(path) as f:
        try:
            raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ValidationError(f"config parse error: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a mapping")
    data = {}
    known = set(ScenarioConfig.__dataclass_fields__)
    for key, value in raw.items():
        target = key
        for canonical, aliases in _LIST_KEYS.items():
            if key in aliases:
                target = canonical
                value = value if isinstance(value, list) else [value]
        if key == "scenarios":
            target, value = "attacks", value if isinstance(value, list) else [value]
        if target not in known:
            raise ValidationError(f"unknown config field {key!r}")
        if target in _LIST_KEYS and not isinstance(value, list):
            value = [value]
        data[target] = value
    return ScenarioConfig(**data).validate()


def write_config(cfg: ScenarioConfig, path):
    """Emit a config file that load_config restores field-for-field."""
    with open(path, "w") as f:
        yaml.safe_dump(asdict(cfg), f, sort_keys=False)
