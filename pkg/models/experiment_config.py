# models/experiment_config.py

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, fields, replace

from dotenv import dotenv_values

from models.ca_model import MemoryMode
from models.errors import BzGateError, ConfigError
from models.evolution_model import AcceptRule, ControllerKind, SearchConfig
from models.gate_model import Gate, GateExperiment, InitiationMask, default_mask
from models.imaging_model import GridGeometry, RenderSettings
from models.reaction_model import KineticParams, LightLevels

# key -> short description written as a comment above the key
KEY_DOCS = {
    "REACTION_EPSILON": "time-scale ratio epsilon",
    "REACTION_F": "stoichiometric factor f",
    "REACTION_Q": "excitability scaling q",
    "REACTION_D_U": "diffusion coefficient of u",
    "REACTION_D_V": "diffusion coefficient of v (0: catalyst immobilized in the gel)",
    "REACTION_DT": "Euler time step",
    "REACTION_DX": "grid spacing",
    "MEDIUM_WIDTH": "simulation points across",
    "MEDIUM_HEIGHT": "simulation points down (grid plus the initiation apron)",
    "LIGHT_HIGH": "phi under high light (inhibits)",
    "LIGHT_THRESHOLD": "phi at the sub-excitable threshold",
    "LIGHT_LOW": "phi under low light (excitable)",
    "GRID_ROWS": "CA rows",
    "GRID_COLS": "CA columns",
    "GRID_CELL_W": "simulation points per cell, horizontally",
    "GRID_CELL_H": "simulation points per cell, vertically",
    "GRID_ORIGIN_X": "left edge of the grid region",
    "GRID_ORIGIN_Y": "top edge of the grid region",
    "IMAGING_V_LO": "v mapped to channel value 0",
    "IMAGING_V_HI": "v mapped to channel value 255",
    "IMAGING_CHANNEL_DELTA": "red/blue change (out of 256) above which a pixel is white",
    "IMAGING_ACTIVITY_THRESHOLD": "white fraction at or above which a cell is active",
    "MASK_PATH": "P5 initiation mask; empty uses the built-in trees",
    "MASK_SEED_W": "seed rectangle width of the built-in mask",
    "MASK_SEED_H": "seed rectangle height of the built-in mask",
    "MASK_IGNITE": "start initiation with seed and trunks excited (false: wait for the seed to self-excite)",
    "GATE_NAME": "AND, NAND or XOR",
    "GATE_ACTIVE_CELL_TARGET": "active cells needed for a logical 1",
    "GATE_CYCLES": "control cycles per input presentation",
    "GATE_ITERATIONS_PER_CYCLE": "simulator steps per control cycle",
    "GATE_INIT_ITERATIONS": "simulator steps of wave initiation",
    "CA_MEMORY": "none, explicit or widrow_hoff",
    "CA_BETA": "Widrow-Hoff learning rate",
    "CA_PERSIST_MEMORY": "carry Widrow-Hoff/explicit memory across the four presentations",
    "SEARCH_MUTATIONS": "genes mutated per generation",
    "SEARCH_BUDGET": "input presentations allowed per run",
    "SEARCH_ACCEPT_RULE": "greater_equal or strictly_greater",
    "SEARCH_CONTROLLER": "coevolutionary or random",
    "RUN_SEED": "64-bit batch seed",
    "RUN_RUNS": "independent runs per batch",
    "RUN_OUTPUT_DIR": "artifact directory",
    "RUN_WORKERS": "worker processes for a batch",
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {"float": float, "int": int, "bool": _parse_bool, "str": str}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Every tunable of an experiment. Field names are the lower-cased config keys.
    """
    reaction_epsilon: float = 0.11
    reaction_f: float = 1.1
    reaction_q: float = 0.0002
    reaction_d_u: float = 1.0
    reaction_d_v: float = 0.0
    reaction_dt: float = 0.001
    reaction_dx: float = 0.62
    medium_width: int = 200
    medium_height: int = 220
    light_high: float = 0.093023
    light_threshold: float = 0.04
    light_low: float = 0.000876
    grid_rows: int = 10
    grid_cols: int = 10
    grid_cell_w: int = 20
    grid_cell_h: int = 20
    grid_origin_x: int = 0
    grid_origin_y: int = 0
    imaging_v_lo: float = 0.0
    imaging_v_hi: float = 0.4
    imaging_channel_delta: int = 5
    imaging_activity_threshold: float = 0.10
    mask_path: str = ""
    mask_seed_w: int = 12
    mask_seed_h: int = 10
    mask_ignite: bool = True
    gate_name: str = "AND"
    gate_active_cell_target: int = 20
    gate_cycles: int = 25
    gate_iterations_per_cycle: int = 600
    gate_init_iterations: int = 5000
    ca_memory: str = "none"
    ca_beta: float = 0.2
    ca_persist_memory: bool = False
    search_mutations: int = 4000
    search_budget: int = 2000
    search_accept_rule: str = "greater_equal"
    search_controller: str = "coevolutionary"
    run_seed: int = 0
    run_runs: int = 10
    run_output_dir: str = "runs"
    run_workers: int = 1

    # building blocks

    def kinetic_params(self) -> KineticParams:
        return KineticParams(self.reaction_epsilon, self.reaction_f, self.reaction_q,
                             self.reaction_d_u, self.reaction_d_v, self.reaction_dt, self.reaction_dx)

    def light_levels(self) -> LightLevels:
        return LightLevels(self.light_high, self.light_threshold, self.light_low)

    def geometry(self) -> GridGeometry:
        return GridGeometry(self.grid_rows, self.grid_cols, self.grid_cell_w, self.grid_cell_h,
                            self.grid_origin_x, self.grid_origin_y)

    def render_settings(self) -> RenderSettings:
        return RenderSettings(self.imaging_v_lo, self.imaging_v_hi)

    def search_config(self) -> SearchConfig:
        return SearchConfig(self.search_mutations, self.search_budget,
                            AcceptRule(self.search_accept_rule),
                            ControllerKind(self.search_controller),
                            MemoryMode(self.ca_memory))

    def mask(self) -> InitiationMask:
        if self.mask_path:
            return InitiationMask.load(self.mask_path)
        return default_mask(self.medium_width, self.medium_height, self.geometry(),
                            self.mask_seed_w, self.mask_seed_h)

    def gate_experiment(self) -> GateExperiment:
        return GateExperiment(
            gate=Gate(self.gate_name.upper()),
            active_cell_target=self.gate_active_cell_target,
            cycles_per_presentation=self.gate_cycles,
            activity_threshold=self.imaging_activity_threshold,
            iterations_per_cycle=self.gate_iterations_per_cycle,
            init_iterations=self.gate_init_iterations,
            ignite=self.mask_ignite,
            width=self.medium_width,
            height=self.medium_height,
            geometry=self.geometry(),
            params=self.kinetic_params(),
            levels=self.light_levels(),
            render_settings=self.render_settings(),
            channel_delta=self.imaging_channel_delta,
            beta=self.ca_beta,
            persist_memory=self.ca_persist_memory,
            mask=self.mask(),
        )

    def validate(self) -> "ExperimentConfig":
        """Build every derived object; raises ConfigError on the first problem."""
        try:
            self.search_config()
            self.gate_experiment()
            if not 0.0 < self.ca_beta < 1.0:
                raise ConfigError(f"CA_BETA must lie in (0, 1), got {self.ca_beta}.")
            if not 0 <= self.imaging_channel_delta <= 255:
                raise ConfigError("IMAGING_CHANNEL_DELTA must lie in 0..255.")
            if not 0 <= self.run_seed <= 0xFFFFFFFFFFFFFFFF:
                raise ConfigError("RUN_SEED must be a 64-bit unsigned integer.")
            if self.run_runs < 1 or self.run_workers < 1:
                raise ConfigError("RUN_RUNS and RUN_WORKERS must be >= 1.")
        except ConfigError:
            raise
        except (BzGateError, ValueError, OSError) as e:
            raise ConfigError(str(e)) from e
        return self

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **given)

    # flat KEY=VALUE text

    def to_items(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type == "float":
                text = repr(float(value))
            elif f.type == "bool":
                text = "true" if value else "false"
            else:
                text = str(value)
            out[f.name.upper()] = text
        return out

    def serialize(self) -> str:
        lines = []
        section = None
        for key, text in self.to_items().items():
            prefix = key.split("_", 1)[0]
            if prefix != section:
                if section is not None:
                    lines.append("")
                lines.append(f"# [{prefix}]")
                section = prefix
            lines.append(f"# {KEY_DOCS[key]}")
            lines.append(f"{key}={text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_items(cls, items: dict) -> "ExperimentConfig":
        known = {f.name.upper(): f for f in fields(cls)}
        kwargs = {}
        for key, text in items.items():
            if key not in known:
                raise ConfigError(f"Unknown config key {key}.")
            if text is None:
                raise ConfigError(f"Config key {key} has no value.")
            f = known[key]
            try:
                kwargs[f.name] = _PARSERS[f.type](text)
            except ValueError as e:
                raise ConfigError(f"Bad value for {key}: {e}") from e
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        if not os.path.exists(path):
            raise ConfigError(f"Config file {path} not found.")
        items = dotenv_values(path, interpolate=False)
        logging.info(f"Loaded {len(items)} config keys from {path}.")
        return cls.from_items(dict(items))

    def save(self, path):
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.serialize())

    def echo(self) -> dict:
        return self.to_items()
