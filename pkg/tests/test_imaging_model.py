# tests/test_imaging_model.py

import numpy as np
import pytest

from models.errors import ConfigError, DimensionMismatch
from models.imaging_model import (
    BinaryFrame, ColorFrame, GridGeometry, GridState, cell_activity, count_fragments,
    diff_threshold, grid_state, observe, quantize, render
)
from models.reaction_model import MediumState


def _state_with_v(v):
    v = np.asarray(v, dtype=np.float64)
    return MediumState(np.zeros_like(v), v)


def test_render_maps_v_to_red_and_blue():
    frame = render(_state_with_v([[0.0, 0.4, 0.2, 1.3]]))
    px = frame.pixels[0]
    assert tuple(px[0][[0, 2]]) == (0, 0)
    assert tuple(px[1][[0, 2]]) == (255, 255)
    assert tuple(px[2][[0, 2]]) == (128, 128)
    assert tuple(px[3][[0, 2]]) == (255, 255)
    assert frame.pixels.dtype == np.uint8


def test_quantize_clamps_negative_values():
    assert quantize(np.array([-0.1]))[0] == 0


def _frames(delta_red, delta_blue):
    prev = np.full((1, 1, 3), 100, dtype=np.uint8)
    cur = prev.copy()
    cur[0, 0, 0] += delta_red
    cur[0, 0, 2] += delta_blue
    return ColorFrame(prev), ColorFrame(cur)


def test_identical_frames_are_black():
    frame = ColorFrame(np.random.default_rng(0).integers(0, 256, (8, 8, 3), dtype=np.uint8))
    assert not diff_threshold(frame, frame).bits.any()


def test_diff_needs_more_than_delta():
    assert not diff_threshold(*_frames(5, 0)).bits[0, 0]
    assert diff_threshold(*_frames(0, 6)).bits[0, 0]
    assert diff_threshold(*_frames(6, 0)).bits[0, 0]


def test_diff_is_symmetric_in_sign():
    prev, cur = _frames(0, 9)
    assert diff_threshold(cur, prev).bits[0, 0]


def test_green_channel_is_ignored():
    prev = ColorFrame(np.zeros((2, 2, 3), dtype=np.uint8))
    cur = prev.pixels.copy()
    cur[..., 1] = 255
    assert not diff_threshold(prev, ColorFrame(cur)).bits.any()


def test_diff_rejects_mismatched_frames():
    with pytest.raises(DimensionMismatch):
        diff_threshold(ColorFrame(np.zeros((2, 2, 3), np.uint8)), ColorFrame(np.zeros((2, 3, 3), np.uint8)))


def test_activity_fractions():
    geom = GridGeometry()
    bits = np.zeros((220, 200), dtype=bool)
    assert np.all(cell_activity(BinaryFrame(bits), geom) == 0.0)

    bits[0:20, 20:40] = True  # cell 1 fully white
    rng = np.random.default_rng(4)
    picks = rng.choice(400, size=40, replace=False)
    bits[40 + picks // 20, 60 + picks % 20] = True  # cell 23, 40 pixels
    bits[210:, :] = True  # apron is ignored
    fractions = cell_activity(BinaryFrame(bits), geom)
    assert fractions.shape == (100,)
    assert fractions[1] == 1.0
    assert fractions[23] == pytest.approx(0.1)
    assert np.count_nonzero(fractions) == 2


def test_grid_state_threshold_is_inclusive():
    fractions = np.zeros(100)
    fractions[0] = 0.10
    fractions[1] = 0.0999
    state = grid_state(fractions)
    assert state.bits[0]
    assert not state.bits[1]
    assert grid_state(np.ones(100)).popcount() == 100


def test_grid_state_rejects_bad_threshold():
    with pytest.raises(ConfigError):
        grid_state(np.zeros(4), threshold=1.5)


def test_grid_state_string_form():
    state = GridState.from_string("0110")
    assert state.to_string() == "0110"
    assert state.popcount() == 2
    with pytest.raises(ValueError):
        GridState.from_string("012")


def test_observe_is_a_pure_function_of_two_states():
    rng = np.random.default_rng(9)
    geom = GridGeometry()
    prev = render(MediumState(rng.random((220, 200)), rng.random((220, 200)) * 0.4))
    cur = MediumState(rng.random((220, 200)), rng.random((220, 200)) * 0.4)
    frame, binary, first = observe(prev, cur, geom)
    _, _, second = observe(prev, cur, geom)
    np.testing.assert_array_equal(first.bits, second.bits)
    assert len(first) == 100
    np.testing.assert_array_equal(frame.pixels, render(cur).pixels)
    np.testing.assert_array_equal(binary.bits, diff_threshold(prev, frame).bits)


def test_binary_frame_equals_quantized_v_difference():
    rng = np.random.default_rng(17)
    for _ in range(50):
        prev = _state_with_v(rng.random((24, 30)) * 0.45)
        # small steps keep many pixels near the delta boundary
        cur = _state_with_v(prev.v + rng.normal(0.0, 0.01, prev.v.shape))
        expected = np.abs(quantize(cur.v).astype(int) - quantize(prev.v).astype(int)) > 5
        np.testing.assert_array_equal(diff_threshold(render(prev), render(cur)).bits, expected)


def test_raising_the_threshold_never_adds_active_cells():
    rng = np.random.default_rng(13)
    for _ in range(20):
        fractions = rng.random(100)
        thresholds = np.sort(rng.random(8))
        states = [grid_state(fractions, t).bits for t in thresholds]
        for lower, higher in zip(states, states[1:]):
            assert not np.any(higher & ~lower)


def test_fragments_are_eight_connected():
    bits = np.zeros((20, 20), dtype=bool)
    bits[2, 2] = bits[3, 3] = True  # diagonal neighbours: one fragment
    bits[10:12, 10:15] = True
    bits[18, 0] = True
    assert count_fragments(BinaryFrame(bits)) == 3


def test_fragments_inside_grid_region_only():
    geom = GridGeometry(rows=2, cols=2, cell_w=5, cell_h=5)
    bits = np.zeros((15, 10), dtype=bool)
    bits[1, 1] = True
    bits[12, 5] = True  # below the grid
    assert count_fragments(BinaryFrame(bits), geom) == 1
    assert count_fragments(BinaryFrame(bits)) == 2


def test_geometry_must_fit_the_medium():
    with pytest.raises(DimensionMismatch):
        GridGeometry().check_fits(150, 220)
