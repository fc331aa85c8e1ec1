# models/imaging_model.py

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from models.errors import ConfigError, DimensionMismatch

if TYPE_CHECKING:
    from models.reaction_model import MediumState

DEFAULT_ACTIVITY_THRESHOLD = 0.10
DEFAULT_CHANNEL_DELTA = 5


@dataclass(frozen=True)
class GridGeometry:
    """
    Placement of the CA grid over the simulation points. origin is the
    top-left point (x, y) of the grid region.
    """
    rows: int = 10
    cols: int = 10
    cell_w: int = 20
    cell_h: int = 20
    origin_x: int = 0
    origin_y: int = 0

    def __post_init__(self):
        if min(self.rows, self.cols, self.cell_w, self.cell_h) < 1:
            raise ConfigError("Grid rows, cols and cell sizes must be >= 1.")
        if self.origin_x < 0 or self.origin_y < 0:
            raise ConfigError("Grid origin must be non-negative.")

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def region(self) -> tuple:
        """Index expression selecting the grid region of a [y, x] array."""
        return (
            slice(self.origin_y, self.origin_y + self.rows * self.cell_h),
            slice(self.origin_x, self.origin_x + self.cols * self.cell_w),
        )

    def check_fits(self, width: int, height: int):
        if (self.origin_x + self.cols * self.cell_w > width
                or self.origin_y + self.rows * self.cell_h > height):
            raise DimensionMismatch(
                f"Grid {self.rows}x{self.cols} of {self.cell_w}x{self.cell_h} cells at "
                f"({self.origin_x}, {self.origin_y}) does not fit a {width}x{height} medium."
            )


@dataclass(frozen=True)
class RenderSettings:
    """Linear v -> 8-bit channel mapping bounds."""
    v_lo: float = 0.0
    v_hi: float = 0.4

    def __post_init__(self):
        if not self.v_hi > self.v_lo:
            raise ConfigError(f"v_hi ({self.v_hi}) must exceed v_lo ({self.v_lo}).")


@dataclass
class ColorFrame:
    pixels: np.ndarray  # (height, width, 3) uint8, channels red, green, blue

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class BinaryFrame:
    bits: np.ndarray  # (height, width) bool, True is white (excitation)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass
class GridState:
    """
    Thresholded activity of the CA cells, row-major.
    """
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool).ravel()

    def __len__(self):
        return self.bits.size

    def popcount(self) -> int:
        return int(self.bits.sum())

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "GridState":
        if set(text) - {"0", "1"}:
            raise ValueError(f"Grid state string may only hold 0/1, got {text!r}.")
        return cls(np.array([c == "1" for c in text], dtype=bool))


def quantize(values: np.ndarray, settings: RenderSettings = RenderSettings()) -> np.ndarray:
    """
    Map [v_lo, v_hi] linearly onto 0..255, clamped, rounding halves up.
    """
    scaled = (np.asarray(values, dtype=np.float64) - settings.v_lo) / (settings.v_hi - settings.v_lo) * 255.0
    return np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)


def render(state: "MediumState", settings: RenderSettings = RenderSettings()) -> ColorFrame:
    """
    Red and blue carry the oxidized catalyst v; green carries u for
    inspection only.
    """
    v8 = quantize(state.v, settings)
    u8 = quantize(state.u, settings)
    return ColorFrame(np.stack([v8, u8, v8], axis=-1))


def diff_threshold(prev: ColorFrame, cur: ColorFrame,
                   delta: int = DEFAULT_CHANNEL_DELTA) -> BinaryFrame:
    """
    White where the red or blue channel changed by more than delta.
    """
    if prev.pixels.shape != cur.pixels.shape:
        raise DimensionMismatch(
            f"Cannot difference frames of shape {prev.pixels.shape} and {cur.pixels.shape}."
        )
    change = np.abs(cur.pixels.astype(np.int16) - prev.pixels.astype(np.int16))
    return BinaryFrame((change[..., 0] > delta) | (change[..., 2] > delta))


def cell_activity(frame: BinaryFrame, geom: GridGeometry) -> np.ndarray:
    """
    Fraction of white pixels in every cell, row-major.
    """
    geom.check_fits(frame.width, frame.height)
    region = frame.bits[geom.region].astype(np.float64)
    blocks = region.reshape(geom.rows, geom.cell_h, geom.cols, geom.cell_w)
    return blocks.mean(axis=(1, 3)).ravel()


def grid_state(fractions, threshold: float = DEFAULT_ACTIVITY_THRESHOLD) -> GridState:
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"Activity threshold must lie in [0, 1], got {threshold}.")
    return GridState(np.asarray(fractions, dtype=np.float64) >= threshold)


def observe(prev_frame: ColorFrame, cur: "MediumState", geom: GridGeometry,
            threshold: float = DEFAULT_ACTIVITY_THRESHOLD,
            settings: RenderSettings = RenderSettings(),
            delta: int = DEFAULT_CHANNEL_DELTA) -> tuple:
    """
    One capture: render `cur`, difference it against the previous capture
    and threshold the cells. Returns (frame, binary_frame, grid_state).
    """
    frame = render(cur, settings)
    binary = diff_threshold(prev_frame, frame, delta)
    return frame, binary, grid_state(cell_activity(binary, geom), threshold)


def count_fragments(frame: BinaryFrame, geom: GridGeometry = None) -> int:
    """
    Number of 8-connected white components, restricted to the grid region
    when a geometry is given.
    """
    bits = frame.bits if geom is None else frame.bits[geom.region]
    _, n = ndimage.label(bits, structure=np.ones((3, 3), dtype=int))
    return int(n)
