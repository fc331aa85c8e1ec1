# tests/test_ca_model.py

import numpy as np
import pytest

from models.ca_model import (
    CaGenome, MemoryMode, MemoryState, act, ca_layout, neighborhood_key, neighborhood_keys,
    smooth, table_sizes, wh_update
)
from models.errors import GenomeFormatError, ModeMismatch
from models.imaging_model import GridState


def _oracle_key(cell, bits, rows=10, cols=10, memory_bit=None):
    r, c = divmod(cell, cols)
    packed = [bits[cell]]
    for rr in range(r - 1, r + 2):
        for cc in range(c - 1, c + 2):
            if (rr, cc) == (r, c) or not (0 <= rr < rows and 0 <= cc < cols):
                continue
            packed.append(bits[rr * cols + cc])
    if memory_bit is not None:
        packed.append(memory_bit)
    return int("".join("1" if b else "0" for b in packed), 2)


@pytest.mark.parametrize("mode, total", [
    (MemoryMode.NONE, 34880),
    (MemoryMode.EXPLICIT, 69760),
    (MemoryMode.WIDROW_HOFF, 34880),
])
def test_gene_counts(mode, total):
    assert int(table_sizes(10, 10, mode).sum()) == total
    assert CaGenome.constant(0, memory_mode=mode).n_genes == total


def test_table_sizes_by_position():
    sizes = table_sizes(10, 10, MemoryMode.NONE)
    assert sizes[0] == 16
    assert sizes[5] == 64
    assert sizes[55] == 512


def test_corner_keys():
    mem = MemoryState.initial(MemoryMode.NONE)
    layout = ca_layout()
    zeros = GridState(np.zeros(100, dtype=bool))
    assert neighborhood_key(0, zeros, mem, layout) == 0
    bits = np.zeros(100, dtype=bool)
    bits[[0, 1, 10, 11]] = True
    assert neighborhood_key(0, GridState(bits), mem, layout) == 15


def test_keys_match_independent_packing():
    rng = np.random.default_rng(1)
    layout = ca_layout()
    mem = MemoryState.initial(MemoryMode.NONE)
    for _ in range(20):
        bits = rng.random(100) < 0.5
        state = GridState(bits)
        keys = neighborhood_keys(state, mem, layout)
        for cell in (0, 9, 45, 57, 90, 99):
            assert neighborhood_key(cell, state, mem, layout) == _oracle_key(cell, bits)
            assert keys[cell] == _oracle_key(cell, bits)


def test_explicit_memory_bit_is_least_significant():
    rng = np.random.default_rng(2)
    layout = ca_layout()
    bits = rng.random(100) < 0.5
    prev = rng.random(100) < 0.5
    mem = MemoryState.initial(MemoryMode.EXPLICIT)
    mem.prev_bits = prev
    keys = neighborhood_keys(GridState(bits), mem, layout)
    for cell in (0, 44, 99):
        assert keys[cell] == _oracle_key(cell, bits, memory_bit=prev[cell])


def test_widrow_hoff_keys_use_smoothed_bits():
    layout = ca_layout()
    mem = MemoryState.initial(MemoryMode.WIDROW_HOFF)
    mem.m = np.full(100, 0.4)
    mem.m[0] = 0.9
    # raw activity does not enter the key, only the smoothed memory
    keys = neighborhood_keys(GridState(np.ones(100, dtype=bool)), mem, layout)
    assert keys[0] == 0b1000
    assert keys[1] == 0b010000


def test_all_high_genome_lights_everything_high():
    genome = CaGenome.constant(2)
    state = GridState(np.random.default_rng(3).random(100) < 0.5)
    light, _ = act(genome, state, MemoryState.initial())
    assert np.all(light.actions == 2)


def test_act_is_deterministic():
    genome = CaGenome.random(np.random.default_rng(4))
    state = GridState(np.random.default_rng(5).random(100) < 0.3)
    first, _ = act(genome, state, MemoryState.initial())
    second, _ = act(genome, state, MemoryState.initial())
    assert first.to_string() == second.to_string()


def test_single_entry_perturbation_changes_one_cell():
    genome = CaGenome.constant(0)
    bits = np.zeros(100, dtype=bool)
    bits[[44, 45, 55]] = True
    state = GridState(bits)
    key = _oracle_key(55, bits)
    genome.genes[genome.offsets[55] + key] = 2
    light, _ = act(genome, state, MemoryState.initial())
    assert np.flatnonzero(light.actions).tolist() == [55]
    assert light.actions[55] == 2


def test_act_marks_exactly_the_looked_up_entries():
    genome = CaGenome.random(np.random.default_rng(6))
    bits = np.random.default_rng(7).random(100) < 0.5
    act(genome, GridState(bits), MemoryState.initial())
    expected = {int(genome.offsets[c]) + _oracle_key(c, bits) for c in range(100)}
    assert set(np.flatnonzero(genome.visited).tolist()) == expected


def test_act_advances_explicit_memory():
    genome = CaGenome.constant(1, memory_mode=MemoryMode.EXPLICIT)
    bits = np.zeros(100, dtype=bool)
    bits[3] = True
    _, mem = act(genome, GridState(bits), MemoryState.initial(MemoryMode.EXPLICIT))
    np.testing.assert_array_equal(mem.prev_bits, bits)


def test_act_rejects_mode_mismatch():
    genome = CaGenome.constant(0, memory_mode=MemoryMode.EXPLICIT)
    with pytest.raises(ModeMismatch):
        act(genome, GridState(np.zeros(100, dtype=bool)), MemoryState.initial(MemoryMode.NONE))
    with pytest.raises(ModeMismatch):
        act(CaGenome.constant(0), GridState(np.zeros(99, dtype=bool)), MemoryState.initial())


def test_widrow_hoff_update():
    assert wh_update(0.5, 1, 0.2) == pytest.approx(0.6)
    assert wh_update(0.5, 0, 0.2) == pytest.approx(0.4)
    m = 0.5
    for t in range(1, 11):
        m = wh_update(m, 1, 0.2)
        assert m == pytest.approx(1 - 0.5 * 0.8 ** t)
    assert 1 - 0.5 * 0.8 ** 3 == pytest.approx(0.744)


def test_smoothing_boundary():
    assert smooth(0.5) == 0
    assert smooth(0.6) == 1
    assert smooth(np.nextafter(0.5, 1.0)) == 1
    np.testing.assert_array_equal(smooth(np.array([0.2, 0.7])), [False, True])


def test_memory_state_validates_beta():
    with pytest.raises(ValueError):
        MemoryState.initial(MemoryMode.WIDROW_HOFF, beta=1.5)


def test_genome_bytes_keep_genes_and_mode():
    genome = CaGenome.random(np.random.default_rng(8), memory_mode=MemoryMode.EXPLICIT)
    loaded = CaGenome.from_bytes(genome.to_bytes())
    assert loaded.memory_mode == MemoryMode.EXPLICIT
    np.testing.assert_array_equal(loaded.genes, genome.genes)


def test_tampered_genome_names_the_offset():
    genome = CaGenome.constant(1)
    data = bytearray(genome.to_bytes())
    body = 8 + 4 * 100
    data[body + 123] = 7
    with pytest.raises(GenomeFormatError) as info:
        CaGenome.from_bytes(bytes(data))
    assert info.value.offset == body + 123
    assert f"offset {body + 123}" in str(info.value)


def test_truncated_genome_is_rejected():
    data = CaGenome.constant(0).to_bytes()
    with pytest.raises(GenomeFormatError):
        CaGenome.from_bytes(data[:-1])
    with pytest.raises(GenomeFormatError):
        CaGenome.from_bytes(b"XXXX" + data[4:])


def test_locate_maps_positions_to_tables():
    genome = CaGenome.constant(0)
    assert genome.locate(0) == (0, 0)
    assert genome.locate(16) == (1, 0)
    assert genome.locate(int(genome.offsets[55]) + 7) == (55, 7)


def _memory_for(mode, inputs, extra, n_cells):
    """Memory state under which `inputs` are the lookup bits and `extra` the memory bit."""
    mem = MemoryState.initial(mode, n_cells)
    if mode == MemoryMode.WIDROW_HOFF:
        return MemoryState(mode, mem.prev_bits, np.where(inputs, 0.9, 0.1), mem.beta)
    return MemoryState(mode, np.full(n_cells, bool(extra)), mem.m, mem.beta)


@pytest.mark.parametrize("mode", list(MemoryMode))
def test_keys_enumerate_each_table_exactly_once(mode):
    layout = ca_layout(4, 4)
    sizes = table_sizes(4, 4, mode)
    rng = np.random.default_rng(23)
    for cell in range(layout.n_cells):
        inputs = [cell, *layout.neighbours[cell]]
        n = layout.n_inputs(cell, mode)
        keys = set()
        for assignment in range(1 << n):
            bits = rng.random(layout.n_cells) < 0.5
            for i, idx in enumerate(inputs):
                bits[idx] = bool((assignment >> (n - 1 - i)) & 1)
            extra = assignment & 1 if mode == MemoryMode.EXPLICIT else 0
            mem = _memory_for(mode, bits, extra, layout.n_cells)
            state = GridState(bits if mode != MemoryMode.WIDROW_HOFF else np.zeros(layout.n_cells))
            keys.add(neighborhood_key(cell, state, mem, layout))
        assert keys == set(range(int(sizes[cell])))


@pytest.mark.parametrize("mode", list(MemoryMode))
def test_act_is_independent_of_cell_order(mode):
    rng = np.random.default_rng(29)
    genome = CaGenome.random(rng, 5, 5, mode)
    layout = ca_layout(5, 5)
    for _ in range(10):
        state = GridState(rng.random(25) < 0.5)
        mem = MemoryState(mode, rng.random(25) < 0.5, rng.random(25), 0.2)
        light, _ = act(genome, state, mem)
        shuffled = np.empty(25, dtype=np.int8)
        for cell in rng.permutation(25):
            key = neighborhood_key(int(cell), state, mem, layout)
            shuffled[cell] = genome.genes[genome.offsets[cell] + key]
        np.testing.assert_array_equal(light.actions, shuffled)
