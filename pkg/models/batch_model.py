# models/batch_model.py

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np

from models.ca_model import MemoryMode
from models.errors import BzGateError, NumericalBlowup, RunFailedError
from models.evolution_model import MAX_FITNESS, ControllerKind, RunResult, run_search
from models.experiment_config import ExperimentConfig
from utils.helper_functions import sub_seed, write_json, write_text

# the four controller variants compared per gate: label -> (controller, memory)
VARIANTS = {
    "coevolutionary": (ControllerKind.COEVOLUTIONARY, MemoryMode.NONE),
    "random": (ControllerKind.RANDOM, MemoryMode.NONE),
    "simple_memory": (ControllerKind.COEVOLUTIONARY, MemoryMode.EXPLICIT),
    "wh_memory": (ControllerKind.COEVOLUTIONARY, MemoryMode.WIDROW_HOFF),
}


def variant_label(config: ExperimentConfig) -> str:
    wanted = (ControllerKind(config.search_controller), MemoryMode(config.ca_memory))
    for label, combo in VARIANTS.items():
        if combo == wanted:
            return label
    return f"{wanted[0].value}_{wanted[1].value}"


def variant_config(config: ExperimentConfig, label: str) -> ExperimentConfig:
    if label not in VARIANTS:
        raise BzGateError(f"Unknown controller variant {label!r}; choose from {', '.join(VARIANTS)}.")
    controller, memory = VARIANTS[label]
    return config.with_overrides(search_controller=controller.value, ca_memory=memory.value)


@dataclass
class BatchStats:
    """
    One row of the results table. Failed runs enter the statistics at the
    budget value, which makes avg a lower bound.
    """
    gate: str
    variant: str
    runs: int
    successes: int
    min: int
    max: int
    avg: float
    std: float
    budget: int
    any_failed: bool

    @property
    def success_rate(self) -> str:
        return f"{self.successes}/{self.runs}"

    def to_record(self) -> dict:
        return {
            "gate": self.gate,
            "variant": self.variant,
            "runs": self.runs,
            "successes": self.successes,
            "success_rate": self.success_rate,
            "min": self.min,
            "max": self.max,
            "max_censored": self.any_failed,
            "avg": round(self.avg, 6),
            "avg_is_lower_bound": self.any_failed,
            "std": round(self.std, 6),
            "budget": self.budget,
        }

    def row(self) -> list:
        mx = f">{self.budget}" if self.any_failed else str(self.max)
        avg = f"{self.avg:.0f}" + ("*" if self.any_failed else "")
        return [self.gate, self.variant, self.success_rate, str(self.min), mx, avg, f"{self.std:.2f}"]


TABLE_HEADER = ["Gate", "Controller", "Success rate", "Min.", "Max.", "Avg.", "Std."]


def aggregate(results: list, gate: str, variant: str, budget: int) -> BatchStats:
    """
    Table statistics over presentations-to-solution; population std so a
    single run has std 0.
    """
    counts = np.array([r.presentations_to_solution if r.success else budget for r in results],
                      dtype=np.float64)
    successes = sum(1 for r in results if r.success)
    return BatchStats(
        gate=gate,
        variant=variant,
        runs=len(results),
        successes=successes,
        min=int(counts.min()),
        max=int(counts.max()),
        avg=float(counts.mean()),
        std=float(counts.std()),
        budget=budget,
        any_failed=successes < len(results),
    )


def mean_fitness_curve(results: list, budget: int, stride: int = 4) -> list:
    """
    Mean best fitness across runs at every `stride` presentations up to the
    budget. A run that has stopped keeps its last fitness (4 once solved).
    """
    points = list(range(stride, budget + 1, stride))
    curve = []
    for p in points:
        values = []
        for r in results:
            fit = r.trajectory[0][1] if r.trajectory else 0
            for used, fitness in r.trajectory:
                if used > p:
                    break
                fit = fitness
            values.append(fit)
        curve.append((p, float(np.mean(values)) if values else 0.0))
    return curve


def run_directory(config: ExperimentConfig, variant: str, run_index: int) -> str:
    return os.path.join(config.run_output_dir, f"{config.gate_name.upper()}_{variant}", f"run_{run_index:03d}")


def execute_run(config: ExperimentConfig, variant: str, run_index: int,
                evaluator_factory=None) -> dict:
    """
    One independent search, written to its own directory. Returns the
    RunResult record. `evaluator_factory(experiment)` replaces the gate
    evaluator when given.
    """
    seed = sub_seed(config.run_seed, run_index)
    out_dir = run_directory(config, variant, run_index)
    logging.info(f"Starting {config.gate_name} {variant} run {run_index} (seed {seed}).")
    try:
        experiment = config.gate_experiment()
        evaluator = evaluator_factory(experiment) if evaluator_factory else None
        result = run_search(experiment, config.search_config(), np.random.default_rng(seed),
                            evaluator=evaluator, seed=seed)
    except NumericalBlowup as e:
        raise RunFailedError(seed, e) from e
    result.config = config.echo()
    # pool size must not leak into the artifacts
    result.config.pop("RUN_WORKERS", None)
    result.config["RUN_INDEX"] = str(run_index)
    result.config["VARIANT"] = variant
    result.genome_file = "genome.bin"
    os.makedirs(out_dir, exist_ok=True)
    result.genome.save(os.path.join(out_dir, result.genome_file))
    write_text(result.genome.summary(), os.path.join(out_dir, "genome.txt"))
    write_json(result.to_record(), os.path.join(out_dir, "result.json"))
    return result.to_record()


def format_table(stats: list) -> str:
    rows = [TABLE_HEADER] + [s.row() for s in stats]
    return "\n".join("\t".join(r) for r in rows) + "\n"


def batch_summary(stats: list, curves: dict) -> dict:
    return {
        "rows": [s.to_record() for s in stats],
        "mean_fitness": {label: [list(p) for p in curve] for label, curve in curves.items()},
        "max_fitness": MAX_FITNESS,
    }


def results_from_records(records: list) -> list:
    return [RunResult.from_record(r) for r in records]


def execute_job(job) -> dict:
    """Pool entry point; `job` is the argument tuple of execute_run."""
    return execute_run(*job)
