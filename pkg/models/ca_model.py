# models/ca_model.py

from __future__ import annotations

import logging
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from models.errors import ConfigError, GenomeFormatError, ModeMismatch

LOW, THRESHOLD, HIGH = 0, 1, 2
DEFAULT_BETA = 0.2
GENOME_MAGIC = b"BZCA"
GENOME_VERSION = 1


class MemoryMode(str, Enum):
    NONE = "none"
    EXPLICIT = "explicit"
    WIDROW_HOFF = "widrow_hoff"


_MODE_CODES = {MemoryMode.NONE: 0, MemoryMode.EXPLICIT: 1, MemoryMode.WIDROW_HOFF: 2}


@dataclass(frozen=True)
class CaLayout:
    """
    Neighbourhoods of a planar (non-wrapping) rows x cols grid with radius 1.
    `neighbours[i]` lists the existing neighbours of cell i in row-major scan order.
    """
    rows: int
    cols: int
    neighbours: tuple

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def n_inputs(self, cell: int, mode: MemoryMode) -> int:
        extra = 1 if mode == MemoryMode.EXPLICIT else 0
        return 1 + len(self.neighbours[cell]) + extra


@lru_cache(maxsize=None)
def ca_layout(rows: int = 10, cols: int = 10) -> CaLayout:
    if rows < 2 or cols < 2:
        raise ConfigError(f"CA grid must be at least 2x2, got {rows}x{cols}.")
    neighbours = []
    for r in range(rows):
        for c in range(cols):
            cell_nb = []
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        cell_nb.append(rr * cols + cc)
            neighbours.append(tuple(cell_nb))
    return CaLayout(rows, cols, tuple(neighbours))


@lru_cache(maxsize=None)
def _key_tables(rows: int, cols: int, mode: MemoryMode):
    """
    Padded (n_cells, 9) source indices and bit weights so that every key is
    one dot product. Self is the most significant bit, the memory bit (if
    any) the least significant one.
    """
    layout = ca_layout(rows, cols)
    index = np.zeros((layout.n_cells, 9), dtype=np.int64)
    weights = np.zeros((layout.n_cells, 9), dtype=np.int64)
    shift = 1 if mode == MemoryMode.EXPLICIT else 0
    for cell in range(layout.n_cells):
        sources = (cell,) + layout.neighbours[cell]
        k = len(sources) + shift
        for pos, src in enumerate(sources):
            index[cell, pos] = src
            weights[cell, pos] = 1 << (k - 1 - pos)
    return index, weights


@dataclass
class LightGrid:
    actions: np.ndarray  # trits, row-major

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.int8).ravel()
        if self.actions.size and (self.actions.min() < LOW or self.actions.max() > HIGH):
            raise ConfigError("Light grid actions must be trits 0, 1 or 2.")

    def to_string(self) -> str:
        return "".join(str(int(a)) for a in self.actions)

    @classmethod
    def uniform(cls, level: int, n_cells: int = 100) -> "LightGrid":
        return cls(np.full(n_cells, level, dtype=np.int8))


@dataclass
class CellTable:
    """View onto one cell's slice of the genome."""
    cell_index: int
    n_inputs: int
    entries: np.ndarray
    visited: np.ndarray


@dataclass
class CaGenome:
    """
    Heterogeneous CA: every cell owns a lookup table of light-level trits.
    All tables are stored back to back in `genes`; `offsets[i]` is where
    cell i's table starts.
    """
    rows: int
    cols: int
    memory_mode: MemoryMode
    genes: np.ndarray
    visited: np.ndarray = field(default=None)

    def __post_init__(self):
        self.memory_mode = MemoryMode(self.memory_mode)
        self.genes = np.asarray(self.genes, dtype=np.int8)
        sizes = table_sizes(self.rows, self.cols, self.memory_mode)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        if self.genes.size != self.offsets[-1]:
            raise ConfigError(
                f"Genome needs {self.offsets[-1]} genes for a {self.rows}x{self.cols} "
                f"{self.memory_mode.value} CA, got {self.genes.size}."
            )
        if self.visited is None:
            self.visited = np.zeros(self.genes.size, dtype=bool)

    @property
    def layout(self) -> CaLayout:
        return ca_layout(self.rows, self.cols)

    @property
    def n_genes(self) -> int:
        return int(self.genes.size)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def table(self, cell: int) -> CellTable:
        lo, hi = self.offsets[cell], self.offsets[cell + 1]
        return CellTable(cell, int(hi - lo).bit_length() - 1,
                         self.genes[lo:hi], self.visited[lo:hi])

    @property
    def tables(self) -> list:
        return [self.table(i) for i in range(self.n_cells)]

    def locate(self, position: int) -> tuple:
        """(cell_index, entry_index) of a flat gene position."""
        cell = int(np.searchsorted(self.offsets, position, side="right") - 1)
        return cell, int(position - self.offsets[cell])

    def copy(self) -> "CaGenome":
        return CaGenome(self.rows, self.cols, self.memory_mode,
                        self.genes.copy(), self.visited.copy())

    def clear_visited(self):
        self.visited[:] = False

    @classmethod
    def random(cls, rng: np.random.Generator, rows: int = 10, cols: int = 10,
               memory_mode: MemoryMode = MemoryMode.NONE) -> "CaGenome":
        total = int(np.sum(table_sizes(rows, cols, MemoryMode(memory_mode))))
        return cls(rows, cols, memory_mode, rng.integers(LOW, HIGH + 1, size=total, dtype=np.int8))

    @classmethod
    def constant(cls, level: int, rows: int = 10, cols: int = 10,
                 memory_mode: MemoryMode = MemoryMode.NONE) -> "CaGenome":
        total = int(np.sum(table_sizes(rows, cols, MemoryMode(memory_mode))))
        return cls(rows, cols, memory_mode, np.full(total, level, dtype=np.int8))

    # serialization

    def to_bytes(self) -> bytes:
        sizes = np.diff(self.offsets).astype("<u4")
        header = GENOME_MAGIC + struct.pack(
            "<BBBB", GENOME_VERSION, _MODE_CODES[self.memory_mode], self.rows, self.cols
        )
        return header + sizes.tobytes() + self.genes.astype(np.uint8).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CaGenome":
        if len(data) < 8 or data[:4] != GENOME_MAGIC:
            raise GenomeFormatError("Not a CA genome file (bad magic).", 0)
        version, mode_code, rows, cols = struct.unpack("<BBBB", data[4:8])
        if version != GENOME_VERSION:
            raise GenomeFormatError(f"Unsupported genome version {version}.", 4)
        modes = {code: mode for mode, code in _MODE_CODES.items()}
        if mode_code not in modes:
            raise GenomeFormatError(f"Unknown memory mode code {mode_code}.", 5)
        mode = modes[mode_code]
        try:
            expected = table_sizes(rows, cols, mode)
        except ConfigError as e:
            raise GenomeFormatError(str(e), 6)
        n_cells = rows * cols
        body = 8 + 4 * n_cells
        if len(data) < body:
            raise GenomeFormatError("Truncated table-size header.", len(data))
        sizes = np.frombuffer(data[8:body], dtype="<u4")
        bad = np.flatnonzero(sizes != expected)
        if bad.size:
            raise GenomeFormatError(
                f"Table {bad[0]} has {sizes[bad[0]]} entries, expected {expected[bad[0]]}.",
                8 + 4 * int(bad[0]),
            )
        total = int(expected.sum())
        if len(data) != body + total:
            raise GenomeFormatError(
                f"Expected {total} gene bytes, found {len(data) - body}.", min(len(data), body + total)
            )
        genes = np.frombuffer(data[body:], dtype=np.uint8)
        bad = np.flatnonzero(genes > HIGH)
        if bad.size:
            raise GenomeFormatError(f"Invalid trit {genes[bad[0]]}.", body + int(bad[0]))
        return cls(rows, cols, mode, genes.astype(np.int8))

    def save(self, path):
        with open(path, "wb") as f:
            f.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "CaGenome":
        with open(path, "rb") as f:
            return cls.from_bytes(f.read())

    def summary(self) -> str:
        """Human-readable per-cell dump of light-level counts."""
        lines = [
            f"# CA genome {self.rows}x{self.cols} memory={self.memory_mode.value} genes={self.n_genes}",
            "# cell n_inputs low threshold high",
        ]
        for t in self.tables:
            counts = np.bincount(t.entries, minlength=3)
            lines.append(f"{t.cell_index} {t.n_inputs} {counts[LOW]} {counts[THRESHOLD]} {counts[HIGH]}")
        return "\n".join(lines) + "\n"


def table_sizes(rows: int, cols: int, mode: MemoryMode) -> np.ndarray:
    layout = ca_layout(rows, cols)
    return np.array([1 << layout.n_inputs(c, mode) for c in range(layout.n_cells)], dtype=np.int64)


# memory

@dataclass
class MemoryState:
    mode: MemoryMode
    prev_bits: np.ndarray
    m: np.ndarray
    beta: float = DEFAULT_BETA

    @classmethod
    def initial(cls, mode: MemoryMode = MemoryMode.NONE, n_cells: int = 100,
                beta: float = DEFAULT_BETA) -> "MemoryState":
        if not 0.0 < beta < 1.0:
            raise ConfigError(f"Widrow-Hoff beta must lie in (0, 1), got {beta}.")
        return cls(MemoryMode(mode), np.zeros(n_cells, dtype=bool), np.full(n_cells, 0.5), beta)


def wh_update(m, sigma, beta: float = DEFAULT_BETA):
    """Delta rule m + beta * (sigma - m); works on scalars and arrays."""
    return m + beta * (sigma - m)


def smooth(m):
    """1 iff m > 0.5."""
    out = np.asarray(m) > 0.5
    return int(out) if out.ndim == 0 else out


class MemoryScheme(ABC):
    """
    How a memory mode turns raw activity into lookup bits and how it
    carries state from one cycle to the next.
    """
    @abstractmethod
    def input_bits(self, raw: np.ndarray, mem: MemoryState) -> np.ndarray:
        pass

    def memory_bits(self, mem: MemoryState):
        return None

    @abstractmethod
    def advance(self, raw: np.ndarray, mem: MemoryState) -> MemoryState:
        pass


class NoMemory(MemoryScheme):
    def input_bits(self, raw, mem):
        return raw

    def advance(self, raw, mem):
        return mem


class ExplicitMemory(MemoryScheme):
    """
    Each cell also sees its own raw bit from the previous cycle.
    """
    def input_bits(self, raw, mem):
        return raw

    def memory_bits(self, mem):
        return mem.prev_bits

    def advance(self, raw, mem):
        return replace(mem, prev_bits=np.array(raw, dtype=bool))


class WidrowHoffMemory(MemoryScheme):
    """
    Cells see the smoothed bits of an exponentially weighted activity average.
    """
    def input_bits(self, raw, mem):
        return smooth(mem.m)

    def advance(self, raw, mem):
        return replace(mem, m=wh_update(mem.m, np.asarray(raw, dtype=np.float64), mem.beta))


_SCHEMES = {
    MemoryMode.NONE: NoMemory(),
    MemoryMode.EXPLICIT: ExplicitMemory(),
    MemoryMode.WIDROW_HOFF: WidrowHoffMemory(),
}


def memory_scheme(mode) -> MemoryScheme:
    return _SCHEMES[MemoryMode(mode)]


def neighborhood_key(cell: int, state, mem: MemoryState, layout: CaLayout = None) -> int:
    """
    Lookup index of one cell: self bit first (most significant), then the
    existing neighbours in row-major order, then the explicit memory bit.
    """
    layout = layout or ca_layout(10, 10)
    raw = np.asarray(state.bits, dtype=bool)
    scheme = memory_scheme(mem.mode)
    eff = np.asarray(scheme.input_bits(raw, mem), dtype=bool)
    bits = [eff[cell]] + [eff[n] for n in layout.neighbours[cell]]
    extra = scheme.memory_bits(mem)
    if extra is not None:
        bits.append(bool(extra[cell]))
    key = 0
    for b in bits:
        key = (key << 1) | int(b)
    return key


def neighborhood_keys(state, mem: MemoryState, layout: CaLayout) -> np.ndarray:
    """All cells' lookup indices at once (same packing as neighborhood_key)."""
    index, weights = _key_tables(layout.rows, layout.cols, mem.mode)
    scheme = memory_scheme(mem.mode)
    eff = np.asarray(scheme.input_bits(np.asarray(state.bits, dtype=bool), mem), dtype=np.int64)
    keys = (eff[index] * weights).sum(axis=1)
    extra = scheme.memory_bits(mem)
    if extra is not None:
        keys += np.asarray(extra, dtype=np.int64)
    return keys


def act(genome: CaGenome, state, mem: MemoryState) -> tuple:
    """
    One synchronous CA update: every cell reads the same grid state, looks
    up its light level and marks that entry visited. Returns the light grid
    and the memory to use on the next cycle.
    """
    if genome.memory_mode != mem.mode:
        raise ModeMismatch(
            f"Genome memory mode {genome.memory_mode.value} does not match memory state {mem.mode.value}."
        )
    if len(state.bits) != genome.n_cells:
        raise ModeMismatch(f"Grid state has {len(state.bits)} bits for {genome.n_cells} cells.")
    keys = neighborhood_keys(state, mem, genome.layout)
    positions = genome.offsets[:-1] + keys
    genome.visited[positions] = True
    light = LightGrid(genome.genes[positions].copy())
    next_mem = memory_scheme(mem.mode).advance(np.asarray(state.bits, dtype=bool), mem)
    logging.debug(f"CA act: {int(np.asarray(state.bits).sum())} active cells -> {light.to_string()}")
    return light, next_mem
