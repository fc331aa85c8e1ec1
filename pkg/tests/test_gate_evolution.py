# tests/test_gate_evolution.py
# Full-size searches; hours of CPU. Run with: pytest -m extended

import pytest

from controllers.main_controller import MainController
from models.experiment_config import ExperimentConfig
from models.gate_model import TRUTH_TABLES, Gate, INPUT_ORDER


def _solved_batch(tmp_path, view, gate, memory, runs, budget):
    config = ExperimentConfig(gate_name=gate, ca_memory=memory, run_runs=runs, search_budget=budget,
                              run_workers=runs, run_seed=1, run_output_dir=str(tmp_path))
    controller = MainController(view, config)
    row = controller.run_batch()[0]
    assert row.runs == runs
    # failed runs are counted at the budget, so every run must succeed
    assert row.successes == runs
    assert row.max <= budget
    return controller


def _replays_correctly(controller, run_dir, gate):
    traces = controller.replay(str(run_dir))
    assert [t.output for t in traces] == [TRUTH_TABLES[Gate(gate)][b] for b in INPUT_ORDER]


@pytest.mark.extended
def test_and_gate_without_memory_within_500(tmp_path, view):
    controller = _solved_batch(tmp_path, view, "AND", "none", runs=3, budget=500)
    _replays_correctly(controller, tmp_path / "AND_coevolutionary" / "run_000", "AND")


@pytest.mark.extended
def test_and_gate_with_widrow_hoff_within_300(tmp_path, view):
    controller = _solved_batch(tmp_path, view, "AND", "widrow_hoff", runs=3, budget=300)
    _replays_correctly(controller, tmp_path / "AND_wh_memory" / "run_000", "AND")


@pytest.mark.extended
@pytest.mark.parametrize("gate", ["NAND", "XOR"])
def test_harder_gates_with_widrow_hoff_within_2000(tmp_path, view, gate):
    controller = _solved_batch(tmp_path, view, gate, "widrow_hoff", runs=2, budget=2000)
    _replays_correctly(controller, tmp_path / f"{gate}_wh_memory" / "run_001", gate)
