# tests/conftest.py

import io

import numpy as np
import pytest

from models.experiment_config import ExperimentConfig
from models.gate_model import GateExperiment, InitiationMask, Region
from models.imaging_model import GridGeometry
from views.console_view import ConsoleView

SMALL_W, SMALL_H = 40, 30
SMALL_GEOMETRY = GridGeometry(rows=2, cols=2, cell_w=20, cell_h=10)


def small_mask_labels():
    """40x30 medium: 2x2 grid of 20x10 cells over a 10-row apron with a seed."""
    labels = np.full((SMALL_H, SMALL_W), Region.BARRIER, dtype=np.int8)
    labels[20:24, 4:36] = Region.TRUNK_LEFT
    labels[24:30, 17:23] = Region.SEED
    return labels


class AlwaysFour:
    presentations_per_evaluation = 4

    def __init__(self, experiment=None):
        self.calls = 0

    def __call__(self, genome):
        self.calls += 1
        return 4


class ConstantFitness:
    presentations_per_evaluation = 4

    def __init__(self, value):
        self.value = value

    def __call__(self, genome):
        return self.value


def always_four_factory(experiment):
    return AlwaysFour(experiment)


def never_four_factory(experiment):
    return ConstantFitness(2)


@pytest.fixture
def small_experiment():
    return GateExperiment(
        width=SMALL_W,
        height=SMALL_H,
        geometry=SMALL_GEOMETRY,
        mask=InitiationMask(small_mask_labels()),
        cycles_per_presentation=3,
        iterations_per_cycle=10,
        init_iterations=10,
        active_cell_target=1,
    )


@pytest.fixture
def small_config(tmp_path):
    """Config for the small rig, with its mask stored as a P5 file."""
    mask_path = tmp_path / "small_mask.pgm"
    InitiationMask(small_mask_labels()).save(mask_path)
    return ExperimentConfig(
        medium_width=SMALL_W,
        medium_height=SMALL_H,
        grid_rows=2,
        grid_cols=2,
        grid_cell_w=20,
        grid_cell_h=10,
        mask_path=str(mask_path),
        gate_active_cell_target=1,
        gate_cycles=3,
        gate_iterations_per_cycle=10,
        gate_init_iterations=10,
        search_mutations=8,
        search_budget=16,
        run_runs=2,
        run_output_dir=str(tmp_path / "runs"),
    )


@pytest.fixture
def view():
    return ConsoleView(out=io.StringIO(), err=io.StringIO())
