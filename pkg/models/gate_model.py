# models/gate_model.py

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Optional

import numpy as np

from models.ca_model import CaGenome, LightGrid, MemoryState, act
from models.errors import ConfigError, DimensionMismatch, MaskFormatError
from models.imaging_model import (
    DEFAULT_ACTIVITY_THRESHOLD, DEFAULT_CHANNEL_DELTA, ColorFrame, GridGeometry, GridState,
    RenderSettings, diff_threshold, observe, render
)
from models.reaction_model import (
    DEFAULT_EPOCH_ITERATIONS, DEFAULT_INIT_ITERATIONS, KineticParams, LightLevels,
    MediumState, initiate_waves, integrate, quiescent_medium, run_epoch
)
from utils.pnm_io import read_pgm, write_pgm

INPUT_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))

FINGER_WIDTH = 6
FINGER_LENGTH = 80
# thickness of bars, stems and trunks, and of the barrier bands between them
CHANNEL = 4
# left edges of the three fingers of each left-tree branch on a 200-point wide medium
_OUTER_FINGERS = (8, 24, 40)
_INNER_FINGERS = (54, 70, 86)


class Region(IntEnum):
    BARRIER = 0
    SEED = 1
    TRUNK_LEFT = 2
    TRUNK_RIGHT = 3
    CHANNEL_LEFT_A = 4
    CHANNEL_LEFT_B = 5
    CHANNEL_RIGHT_A = 6
    CHANNEL_RIGHT_B = 7


# gray level of every region in the P5 mask asset
REGION_GRAY = {
    Region.SEED: 0,
    Region.TRUNK_LEFT: 40,
    Region.TRUNK_RIGHT: 60,
    Region.CHANNEL_LEFT_A: 100,
    Region.CHANNEL_LEFT_B: 120,
    Region.CHANNEL_RIGHT_A: 160,
    Region.CHANNEL_RIGHT_B: 180,
    Region.BARRIER: 255,
}


class Gate(str, Enum):
    AND = "AND"
    NAND = "NAND"
    XOR = "XOR"


TRUTH_TABLES = {
    Gate.AND: {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 1},
    Gate.NAND: {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 0},
    Gate.XOR: {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0},
}


@dataclass
class InitiationMask:
    """
    Per-point region labels of the initiation trees, indexed [y, x].
    Branch a of each tree is the inner one and stays open for a 0 bit.
    """
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.labels.ndim != 2:
            raise MaskFormatError(f"Mask must be 2-D, got shape {self.labels.shape}.")
        if not np.any(self.labels == Region.SEED):
            raise MaskFormatError("Mask has no seed region.")

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def region(self, label: Region) -> np.ndarray:
        return self.labels == label

    def phi_for_input(self, bits, levels: LightLevels) -> np.ndarray:
        return encode_input(bits, self, levels)

    def ignition_region(self) -> np.ndarray:
        """Seed and trunks: the parts of the trees open under every input."""
        return np.isin(self.labels, (Region.SEED, Region.TRUNK_LEFT, Region.TRUNK_RIGHT))

    # P5 asset

    def save(self, path):
        gray = np.zeros(self.labels.shape, dtype=np.uint8)
        for label, level in REGION_GRAY.items():
            gray[self.labels == label] = level
        write_pgm(gray, path)

    @classmethod
    def load(cls, path) -> "InitiationMask":
        gray = read_pgm(path)
        labels = np.full(gray.shape, -1, dtype=np.int8)
        for label, level in REGION_GRAY.items():
            labels[gray == level] = label
        unknown = np.argwhere(labels < 0)
        if unknown.size:
            y, x = unknown[0]
            raise MaskFormatError(
                f"Mask {path} has unmapped gray level {gray[y, x]} at ({x}, {y})."
            )
        logging.info(f"Loaded initiation mask {path} ({gray.shape[1]}x{gray.shape[0]}).")
        return cls(labels)


def default_mask(width: int = 200, height: int = 220, geometry: GridGeometry = GridGeometry(),
                 seed_w: int = 12, seed_h: int = 10) -> InitiationMask:
    """
    Two initiation trees below the grid. The seed sits centred at the bottom
    of the apron with a trunk leaving each side of it. Every branch is a bar
    under three fingers that reach up into the grid, joined to its trunk by
    a short stem under the middle finger. Under input 11 the grid region
    therefore holds 12 separate channels.

    Apron bands below the grid edge, CHANNEL rows each: finger stubs and
    bars, stems, trunks. No finger is more than a bar's half-length plus
    about ten rows away from its trunk.
    """
    geometry.check_fits(width, height)
    top = geometry.origin_y + geometry.rows * geometry.cell_h
    apron = height - top
    bar_y = top + 2
    stem_y = bar_y + CHANNEL
    trunk_y = stem_y + CHANNEL
    if apron < trunk_y + CHANNEL - top:
        raise ConfigError(
            f"The default mask needs >= {trunk_y + CHANNEL - top} rows below the grid, got {apron}."
        )
    # the seed must touch the trunks without rising to the bars
    if not (trunk_y <= height - seed_h < trunk_y + CHANNEL):
        raise ConfigError(f"Seed height {seed_h} does not meet the trunks in a {apron}-row apron.")
    if width < 100 or seed_w < 1 or seed_w > width // 4:
        raise ConfigError(f"Unsupported mask width {width} / seed width {seed_w}.")

    labels = np.full((height, width), Region.BARRIER, dtype=np.int8)
    scale = width / 200.0
    finger_top = max(geometry.origin_y, top - FINGER_LENGTH)
    seed_x0 = (width - seed_w) // 2

    def mirror(x):
        return width - x - FINGER_WIDTH

    def paint_branch(lefts, label):
        xs = sorted(lefts)
        for x in xs:
            labels[finger_top:bar_y, x:x + FINGER_WIDTH] = label
        labels[bar_y:stem_y, xs[0]:xs[-1] + FINGER_WIDTH] = label
        labels[stem_y:trunk_y, xs[1]:xs[1] + FINGER_WIDTH] = label
        return xs[1]

    outer = [int(round(x * scale)) for x in _OUTER_FINGERS]
    inner = [int(round(x * scale)) for x in _INNER_FINGERS]
    if inner[-1] + FINGER_WIDTH + 2 > seed_x0:
        raise ConfigError(f"Seed width {seed_w} overlaps the inner branches.")

    left_b = paint_branch(outer, Region.CHANNEL_LEFT_B)
    paint_branch(inner, Region.CHANNEL_LEFT_A)
    right_b = paint_branch([mirror(x) for x in outer], Region.CHANNEL_RIGHT_B)
    paint_branch([mirror(x) for x in inner], Region.CHANNEL_RIGHT_A)

    labels[trunk_y:trunk_y + CHANNEL, left_b:seed_x0] = Region.TRUNK_LEFT
    labels[trunk_y:trunk_y + CHANNEL, seed_x0 + seed_w:right_b + FINGER_WIDTH] = Region.TRUNK_RIGHT
    labels[height - seed_h:height, seed_x0:seed_x0 + seed_w] = Region.SEED
    return InitiationMask(labels)


def encode_input(bits, mask: InitiationMask, levels: LightLevels = LightLevels()) -> np.ndarray:
    """
    Initiation phi field for input (I1, I2): the left tree encodes I1, the
    right tree I2. A 1 opens both branches of its tree, a 0 only branch a.
    """
    i1, i2 = (int(b) for b in bits)
    if i1 not in (0, 1) or i2 not in (0, 1):
        raise ConfigError(f"Input bits must be binary, got {tuple(bits)}.")
    phi = np.full(mask.shape, levels.high, dtype=np.float64)
    open_regions = [Region.TRUNK_LEFT, Region.TRUNK_RIGHT,
                    Region.CHANNEL_LEFT_A, Region.CHANNEL_RIGHT_A]
    if i1:
        open_regions.append(Region.CHANNEL_LEFT_B)
    if i2:
        open_regions.append(Region.CHANNEL_RIGHT_B)
    for label in open_regions:
        phi[mask.labels == label] = levels.low
    phi[mask.labels == Region.SEED] = 0.0
    return phi


@dataclass
class GateExperiment:
    """
    One logic-gate task together with the simulated rig it runs on.
    """
    gate: Gate = Gate.AND
    active_cell_target: int = 20
    cycles_per_presentation: int = 25
    activity_threshold: float = DEFAULT_ACTIVITY_THRESHOLD
    iterations_per_cycle: int = DEFAULT_EPOCH_ITERATIONS
    init_iterations: int = DEFAULT_INIT_ITERATIONS
    ignite: bool = True
    width: int = 200
    height: int = 220
    geometry: GridGeometry = field(default_factory=GridGeometry)
    params: KineticParams = field(default_factory=KineticParams)
    levels: LightLevels = field(default_factory=LightLevels)
    render_settings: RenderSettings = field(default_factory=RenderSettings)
    channel_delta: int = DEFAULT_CHANNEL_DELTA
    beta: float = 0.2
    persist_memory: bool = False
    mask: Optional[InitiationMask] = None

    def __post_init__(self):
        self.gate = Gate(self.gate)
        if self.active_cell_target < 1:
            raise ConfigError("active_cell_target must be >= 1.")
        if self.cycles_per_presentation < 1:
            raise ConfigError("cycles_per_presentation must be >= 1.")
        if self.iterations_per_cycle < 1 or self.init_iterations < 0:
            raise ConfigError("Iteration counts must be positive.")
        self.geometry.check_fits(self.width, self.height)
        if self.mask is None:
            self.mask = default_mask(self.width, self.height, self.geometry)
        if self.mask.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"Mask shape {self.mask.shape} does not match the {self.width}x{self.height} medium."
            )

    @property
    def truth_table(self) -> dict:
        return TRUTH_TABLES[self.gate]


@dataclass
class CycleRecord:
    cycle: int
    state: GridState
    light: LightGrid


@dataclass
class EpisodeTrace:
    """Everything one input presentation observed and decided."""
    bits: tuple
    cycles: list
    final_state: GridState
    output: int
    memory: MemoryState = None


def decide_output(state: GridState, target: int = 20) -> int:
    if target < 1:
        raise ConfigError(f"Active cell target must be >= 1, got {target}.")
    return 1 if state.popcount() >= target else 0


def _outside_grid(experiment: GateExperiment) -> np.ndarray:
    inside = np.zeros((experiment.height, experiment.width), dtype=bool)
    inside[experiment.geometry.region] = True
    return ~inside


def initiated_medium(experiment: GateExperiment, bits) -> tuple:
    """
    Reset the medium, capture its frame and initiate waves for `bits`.
    Returns (reset_frame, state) with phi outside the grid already high,
    so injection stops once control begins.
    """
    ex = experiment
    state = MediumState.dark(ex.width, ex.height)
    reset_frame = render(state, ex.render_settings)
    state = initiate_waves(state, ex.mask, bits, ex.init_iterations, ex.levels, ex.params,
                           ignite=ex.ignite)
    state.phi[_outside_grid(ex)] = ex.levels.high
    return reset_frame, state


def run_presentation(genome: CaGenome, bits, experiment: GateExperiment,
                     memory: MemoryState = None,
                     frame_sink: Callable = None) -> tuple:
    """
    One input presentation: reset the medium, initiate waves for `bits`,
    then run the capture -> difference -> threshold -> CA -> simulate loop.
    `frame_sink(cycle, state, color_frame, binary_frame, grid_state)` is
    called for every capture, including the final one (cycle n+1).
    """
    ex = experiment
    bits = tuple(int(b) for b in bits)
    if memory is None:
        memory = MemoryState.initial(genome.memory_mode, genome.n_cells, ex.beta)
    prev_frame, state = initiated_medium(ex, bits)

    def capture(cycle, state, prev_frame: ColorFrame):
        frame, binary, gs = observe(prev_frame, state, ex.geometry, ex.activity_threshold,
                                    ex.render_settings, ex.channel_delta)
        if frame_sink is not None:
            frame_sink(cycle, state, frame, binary, gs)
        return frame, gs

    records = []
    for cycle in range(1, ex.cycles_per_presentation + 1):
        prev_frame, gs = capture(cycle, state, prev_frame)
        light, memory = act(genome, gs, memory)
        records.append(CycleRecord(cycle, gs, light))
        state = run_epoch(state, light, ex.geometry, ex.iterations_per_cycle, ex.levels, ex.params)

    _, final = capture(ex.cycles_per_presentation + 1, state, prev_frame)
    output = decide_output(final, ex.active_cell_target)
    logging.debug(
        f"Presentation {bits[0]}{bits[1]}: {final.popcount()} active cells -> output {output}"
    )
    return output, EpisodeTrace(bits, records, final, output, memory)


def presentation_outputs(genome: CaGenome, experiment: GateExperiment,
                         frame_sink_factory: Callable = None) -> list:
    """
    Run the four presentations in order 00, 01, 10, 11 and return their traces.
    Visited flags accumulate on the genome across all four.
    """
    traces = []
    memory = None
    for bits in INPUT_ORDER:
        sink = frame_sink_factory(bits) if frame_sink_factory else None
        _, trace = run_presentation(genome, bits, experiment, memory, sink)
        traces.append(trace)
        if experiment.persist_memory:
            memory = trace.memory
    return traces


def score_outputs(outputs, truth_table: dict) -> int:
    return sum(int(out == truth_table[bits]) for bits, out in zip(INPUT_ORDER, outputs))


def gate_fitness(genome: CaGenome, experiment: GateExperiment) -> int:
    """Number of the four presentations answered correctly (0..4)."""
    traces = presentation_outputs(genome, experiment)
    return score_outputs([t.output for t in traces], experiment.truth_table)


class GateEvaluator:
    """
    Fitness function handed to the hillclimber; every call costs four
    input presentations.
    """
    presentations_per_evaluation = len(INPUT_ORDER)

    def __init__(self, experiment: GateExperiment):
        self.experiment = experiment
        self.last_traces = []

    def __call__(self, genome: CaGenome) -> int:
        self.last_traces = presentation_outputs(genome, self.experiment)
        return score_outputs([t.output for t in self.last_traces], self.experiment.truth_table)


# excitability regimes

# above the excitation threshold at low and threshold light, below it at high light
FRAGMENT_U = 0.07


def seeded_fragment(width: int, height: int, phi: float,
                    params: KineticParams = KineticParams()) -> MediumState:
    """
    Quiescent medium at `phi` with a horizontal bar of raised u across its
    middle: ten rows high and two fifths of the width long.
    """
    state = quiescent_medium(width, height, phi, params)
    y0 = height // 2 - 5
    x0, x1 = (3 * width) // 10, (7 * width) // 10
    state.u[max(y0, 0):y0 + 10, x0:x1] = FRAGMENT_U
    return state


def fragment_areas(phi: float, epochs: int = 5, width: int = 200, height: int = 200,
                   n_iter: int = DEFAULT_EPOCH_ITERATIONS,
                   params: KineticParams = KineticParams(),
                   settings: RenderSettings = RenderSettings(),
                   delta: int = DEFAULT_CHANNEL_DELTA) -> list:
    """
    White-pixel area after each of `epochs` epochs of a seeded fragment
    under uniform phi, each capture differenced against the one before.
    """
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}.")
    state = seeded_fragment(width, height, phi, params)
    frame = render(state, settings)
    areas = []
    for _ in range(epochs):
        state = integrate(state, params, n_iter)
        cur = render(state, settings)
        areas.append(int(diff_threshold(frame, cur, delta).bits.sum()))
        frame = cur
    logging.debug(f"Fragment areas at phi={phi}: {areas}")
    return areas
