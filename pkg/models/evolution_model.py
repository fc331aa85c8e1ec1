# models/evolution_model.py

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from models.ca_model import CaGenome, MemoryMode
from models.errors import ConfigError

MAX_FITNESS = 4


class AcceptRule(str, Enum):
    GREATER_EQUAL = "greater_equal"
    STRICTLY_GREATER = "strictly_greater"


class ControllerKind(str, Enum):
    COEVOLUTIONARY = "coevolutionary"
    RANDOM = "random"


@dataclass(frozen=True)
class SearchConfig:
    mutations_per_generation: int = 4000
    budget_presentations: int = 2000
    accept_rule: AcceptRule = AcceptRule.GREATER_EQUAL
    controller_kind: ControllerKind = ControllerKind.COEVOLUTIONARY
    memory_mode: MemoryMode = MemoryMode.NONE

    def __post_init__(self):
        object.__setattr__(self, "accept_rule", AcceptRule(self.accept_rule))
        object.__setattr__(self, "controller_kind", ControllerKind(self.controller_kind))
        object.__setattr__(self, "memory_mode", MemoryMode(self.memory_mode))
        if self.mutations_per_generation < 1:
            raise ConfigError("mutations_per_generation must be >= 1.")
        if self.budget_presentations < 1:
            raise ConfigError("budget_presentations must be >= 1.")

    def accepts(self, candidate: int, incumbent: int) -> bool:
        if self.accept_rule == AcceptRule.STRICTLY_GREATER:
            return candidate > incumbent
        return candidate >= incumbent


@dataclass
class MutationRecord:
    cell_index: int
    entry_index: int
    old_trit: int
    new_trit: int
    position: int


class MutationLog:
    """
    Mutations of one generation, one record per gene. A gene hit twice
    keeps the value it had before the first hit as old_trit.
    """
    def __init__(self):
        self._records = {}

    def record(self, genome: CaGenome, position: int, old: int, new: int):
        if position in self._records:
            self._records[position].new_trit = new
        else:
            cell, entry = genome.locate(position)
            self._records[position] = MutationRecord(cell, entry, old, new, position)

    @property
    def records(self) -> list:
        return list(self._records.values())

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records.values())


def mutate(genome: CaGenome, n: int, rng: np.random.Generator) -> tuple:
    """
    Copy of `genome` with n genes drawn uniformly with replacement, each set
    to one of the two other trits. Visited flags of the copy are cleared.
    """
    if n < 1:
        raise ConfigError(f"Mutation count must be >= 1, got {n}.")
    child = genome.copy()
    child.clear_visited()
    positions = rng.integers(0, child.n_genes, size=n)
    shifts = rng.integers(1, 3, size=n)
    log = MutationLog()
    genes = child.genes
    for pos, shift in zip(positions.tolist(), shifts.tolist()):
        old = int(genes[pos])
        new = (old + shift) % 3
        genes[pos] = new
        log.record(child, pos, old, new)
    return child, log


def revert_unvisited(genome: CaGenome, log: MutationLog) -> CaGenome:
    """
    Undo every logged mutation whose entry was not visited since mutation.
    """
    out = genome.copy()
    reverted = 0
    for rec in log:
        if not out.visited[rec.position]:
            out.genes[rec.position] = rec.old_trit
            reverted += 1
    logging.debug(f"Reverted {reverted} of {len(log)} mutations as unvisited.")
    return out


def _evaluation_cost(evaluator) -> int:
    return int(getattr(evaluator, "presentations_per_evaluation", 4))


def hillclimb_step(best: CaGenome, best_fitness: int, config: SearchConfig,
                   evaluator: Callable, rng: np.random.Generator) -> tuple:
    """
    One generation: mutate, evaluate, drop untested mutations, then accept
    or reject. The random controller keeps every tested mutation whatever
    its fitness.
    """
    mutant, log = mutate(best, config.mutations_per_generation, rng)
    fitness = int(evaluator(mutant))
    # unvisited genes cannot change the deterministic outcome, so fitness still holds
    mutant = revert_unvisited(mutant, log)
    used = _evaluation_cost(evaluator)
    if config.controller_kind == ControllerKind.RANDOM:
        return mutant, fitness, used
    if config.accepts(fitness, best_fitness):
        return mutant, fitness, used
    return best, best_fitness, used


@dataclass
class RunResult:
    seed: int
    success: bool
    presentations_used: int
    presentations_to_solution: Optional[int]
    final_fitness: int
    trajectory: list = field(default_factory=list)  # (presentations, fitness) per generation
    genome: Optional[CaGenome] = None
    config: dict = field(default_factory=dict)
    genome_file: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "seed": self.seed,
            "success": self.success,
            "presentations_used": self.presentations_used,
            "presentations_to_solution": self.presentations_to_solution,
            "final_fitness": self.final_fitness,
            "trajectory": [list(p) for p in self.trajectory],
            "config": self.config,
            "genome_file": self.genome_file,
        }

    @classmethod
    def from_record(cls, record: dict) -> "RunResult":
        return cls(
            seed=int(record["seed"]),
            success=bool(record["success"]),
            presentations_used=int(record["presentations_used"]),
            presentations_to_solution=record.get("presentations_to_solution"),
            final_fitness=int(record["final_fitness"]),
            trajectory=[tuple(p) for p in record.get("trajectory", [])],
            config=dict(record.get("config", {})),
            genome_file=record.get("genome_file"),
        )


def run_search(task, config: SearchConfig, rng: np.random.Generator,
               evaluator: Callable = None, seed: int = None) -> RunResult:
    """
    Hillclimb from a random genome until a perfect gate is found or the
    presentation budget is spent. The initial evaluation counts against
    the budget.
    """
    if evaluator is None:
        from models.gate_model import GateEvaluator
        evaluator = GateEvaluator(task)
    rows, cols = task.geometry.rows, task.geometry.cols
    cost = _evaluation_cost(evaluator)

    best = CaGenome.random(rng, rows, cols, config.memory_mode)
    best_fitness = int(evaluator(best))
    used = cost
    trajectory = [(used, best_fitness)]
    logging.info(f"Run seed={seed}: initial fitness {best_fitness}.")

    while best_fitness < MAX_FITNESS and used + cost <= config.budget_presentations:
        previous = best_fitness
        best, best_fitness, spent = hillclimb_step(best, best_fitness, config, evaluator, rng)
        used += spent
        trajectory.append((used, best_fitness))
        if best_fitness > previous:
            logging.info(f"Run seed={seed}: fitness {previous} -> {best_fitness} after {used} presentations.")
        else:
            logging.debug(f"Run seed={seed}: generation at {used} presentations, fitness {best_fitness}.")

    success = best_fitness >= MAX_FITNESS
    if success:
        logging.info(f"Run seed={seed}: solved in {used} presentations.")
    else:
        logging.info(f"Run seed={seed}: budget of {config.budget_presentations} presentations exhausted.")
    return RunResult(
        seed=seed,
        success=success,
        presentations_used=used if success else config.budget_presentations,
        presentations_to_solution=used if success else None,
        final_fitness=best_fitness,
        trajectory=trajectory,
        genome=best,
    )
