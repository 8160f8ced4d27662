import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdrisk.core import Vec2
from crowdrisk.maps import (
    ANGLE_BINS,
    SPEED_BINS,
    ConcentrationMap,
    ExhalationMode,
    GridSpec,
    IncompleteLibrary,
    MapFormatError,
    MapLibrary,
    PuffParams,
    angle_bin,
    bin_indices,
    format_map,
    generate_surrogate_map,
    library_keys,
    load_library,
    map_filename,
    nearest_map,
    parse_map,
    read_map,
    sample,
    speed_bin,
    write_library,
    write_map,
)

SPEAKING = ExhalationMode.SPEAKING
SMALL = GridSpec(x0=-1.0, y0=-1.0, nx=11, ny=11, dx=0.2, dy=0.2, nt=5, dtau=0.5)


@pytest.fixture(scope="module")
def calm():
    return generate_surrogate_map(SPEAKING, (0.0, 0.0))


def test_default_grid_covers_required_extent():
    g = GridSpec()
    assert g.xs[0] <= -1 and g.xs[-1] >= 4 - 1e-9
    assert g.ys[0] <= -2.5 and g.ys[-1] >= 2.5 - 1e-9
    assert g.tau_end == pytest.approx(20.0)


def test_peak_at_mouth_initially(calm):
    k0 = calm.values[0]
    iy, ix = np.unravel_index(np.argmax(k0), k0.shape)
    assert (calm.grid.xs[ix], calm.grid.ys[iy]) == pytest.approx((0.0, 0.0), abs=1e-9)
    assert PuffParams().sigma(0.0) == pytest.approx(0.1)


def test_centroid_arithmetic():
    mx, my = PuffParams().centroid((0.0, 0.2), 10.0)
    assert my == pytest.approx(2.0)
    assert mx == pytest.approx(1.0 - math.exp(-10.0))


@pytest.mark.parametrize("mode", [ExhalationMode.BREATHING, ExhalationMode.SPEAKING])
def test_slice_mass_before_clip(mode):
    p = PuffParams()
    m = generate_surrogate_map(mode, (0.0, 0.0), clip=False)
    for k in (0, 4, 20, 40, 80):
        tau = m.grid.taus[k]
        expected = p.strength(mode) * math.exp(-p.decay * tau)
        assert m.mass(k) == pytest.approx(expected, rel=0.02)


def test_centroid_advection_under_wind():
    # u_jet = 0 isolates the wind term; the numerical centroid must follow 0.2*tau
    # the grid is widened so the whole puff stays inside it up to tau = 20 s
    p = PuffParams(u_jet=1e-12)
    g = GridSpec.covering(x_range=(-3.0, 3.0), y_range=(-2.0, 7.0))
    m = generate_surrogate_map(SPEAKING, (0.0, 0.2), g, p, clip=False)
    X, Y = np.meshgrid(m.grid.xs, m.grid.ys)
    for k in (0, 8, 20, 40, 80):
        w = m.values[k]
        cy = (w * Y).sum() / w.sum()
        assert abs(cy - 0.2 * m.grid.taus[k]) <= m.grid.dy


def test_zero_beyond_cutoff_everywhere():
    m = generate_surrogate_map(SPEAKING, (2.0, 0.0))
    X, Y = np.meshgrid(m.grid.xs, m.grid.ys)
    assert np.all(m.values[:, X**2 + Y**2 > 16.0] == 0.0)
    assert np.all(np.isfinite(m.values)) and np.all(m.values >= 0)


def test_large_droplets_frontal_cone():
    m = generate_surrogate_map(ExhalationMode.LARGE_DROPLETS, (0.0, 0.0))
    X, Y = np.meshgrid(m.grid.xs, m.grid.ys)
    outside = (np.hypot(X, Y) > 1.5) | (np.abs(np.arctan2(Y, X)) > math.radians(30) + 1e-9)
    assert np.all(m.values[:, outside] == 0)
    assert m.values.max() > 0


def test_rotational_covariance_without_jet():
    g = GridSpec(x0=-2.5, y0=-2.5, nx=51, ny=51, dx=0.1, dy=0.1, nt=41, dtau=0.25)
    p = PuffParams(u_jet=1e-12)
    a = generate_surrogate_map(SPEAKING, (0.3, 0.0), g, p)
    b = generate_surrogate_map(SPEAKING, (0.0, 0.3), g, p)
    # a 90 degree rotation maps grid nodes onto grid nodes: b(x, y) = a(y, -x)
    n = g.nx
    rotated = a.values[:, n - 1 - np.arange(n)[None, :], np.arange(n)[:, None]]
    np.testing.assert_allclose(b.values, rotated, atol=1e-12 * a.values.max())


def test_mass_strictly_decreasing(calm):
    masses = [calm.mass(k) for k in range(calm.grid.nt)]
    assert all(b < a for a, b in zip(masses, masses[1:]))


def test_sample_examples(calm):
    assert sample(calm, (10.0, 0.0), 1.0) == 0.0
    g = calm.grid
    assert sample(calm, (g.xs[13], g.ys[27]), g.taus[6]) == calm.values[6, 27, 13]
    assert sample(calm, (0.0, 0.0), g.tau_end + 0.1) == 0.0
    assert sample(calm, (-1.5, 0.0), 1.0) == 0.0
    with pytest.raises(ValueError):
        sample(calm, (0.0, 0.0), -0.1)


def test_sample_reproduces_linear_fields():
    g = SMALL
    T, Y, X = np.meshgrid(g.taus, g.ys, g.xs, indexing="ij")
    ramp = 1.0 + 0.3 * X - 0.2 * Y + 0.7 * T + 2.0
    m = ConcentrationMap(SPEAKING, Vec2(0, 0), g, ramp)
    # cell centre: the mean of the eight surrounding nodes
    x, y, tau = g.xs[3] + 0.1, g.ys[5] + 0.1, g.taus[1] + 0.25
    corners = ramp[1:3, 5:7, 3:5]
    assert sample(m, (x, y), tau) == pytest.approx(corners.mean(), rel=1e-12)
    assert sample(m, (x, y), tau) == pytest.approx(3.0 + 0.3 * x - 0.2 * y + 0.7 * tau, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(0.0, 1.9))
def test_sample_continuous_across_cells(x, y, tau):
    rng = np.random.default_rng(1)
    m = ConcentrationMap(SPEAKING, Vec2(0, 0), SMALL, rng.uniform(0, 1, (5, 11, 11)))
    eps = 1e-9
    a = sample(m, (x, y), tau)
    b = sample(m, (x + eps, y - eps), tau + eps)
    # gradient of a trilinear field over unit-range data is bounded by a few per cell width
    assert abs(a - b) < 100 * eps


def test_speed_and_angle_bins():
    assert (speed_bin(0.0), angle_bin(0.0, 0.0)) == (0, 0)
    assert SPEED_BINS[speed_bin(0.4)] == 0.5
    assert SPEED_BINS[speed_bin(0.375)] == 0.25  # tie goes to the lower bin
    assert SPEED_BINS[speed_bin(5.0)] == 2.0
    a = math.radians(44)
    assert ANGLE_BINS[angle_bin(math.cos(a), math.sin(a))] == 30
    a = math.radians(45)
    assert ANGLE_BINS[angle_bin(math.cos(a), math.sin(a))] == 60  # tie goes counter-clockwise
    assert ANGLE_BINS[angle_bin(1.0, -0.01)] == 0
    assert ANGLE_BINS[angle_bin(0.0, -1.0)] == 270


def test_vectorised_bins_agree():
    rng = np.random.default_rng(0)
    w = rng.normal(0, 1, (500, 2))
    got = bin_indices(w)
    want = [speed_bin(math.hypot(*v)) * 12 + angle_bin(*v) for v in w]
    np.testing.assert_array_equal(got, want)


def test_cmap_round_trip_bit_equal(tmp_path):
    m = generate_surrogate_map(SPEAKING, (0.1234567890123, -0.2), SMALL)
    write_map(m, tmp_path / "m.cmap")
    back = read_map(tmp_path / "m.cmap")
    assert back == m
    assert back.values.tobytes() == m.values.tobytes()


def test_cmap_layout():
    text = format_map(generate_surrogate_map(SPEAKING, (0.0, 0.5), SMALL))
    lines = text.splitlines()
    assert lines[0] == "CMAP1" and lines[1] == "speaking" and lines[2] == "0.0 0.5"
    assert lines[3] == "11 11 5 0.2 0.2 0.5 -1.0 -1.0"
    assert len(lines) == 4 + 5 * 11
    assert all(len(ln.split()) == 11 for ln in lines[4:])


def test_minimal_map():
    m = parse_map("CMAP1\nbreathing\n0 0\n1 1 1 0.1 0.1 0.25 0 0\n2.5\n")
    assert m.values.shape == (1, 1, 1)
    assert sample(m, (0.0, 0.0), 0.0) == 2.5
    assert sample(m, (0.05, 0.0), 0.0) == 0.0


def test_tampered_negative_value_names_line():
    text = format_map(generate_surrogate_map(SPEAKING, (0.0, 0.0), SMALL)).splitlines()
    toks = text[10].split()
    toks[3] = "-1e-3"
    text[10] = " ".join(toks)
    with pytest.raises(MapFormatError, match=r"m\.cmap:11: negative"):
        parse_map("\n".join(text), "m.cmap")


@pytest.mark.parametrize("text, line, what", [
    ("CMAP2\nspeaking\n0 0\n1 1 1 1 1 1 0 0\n1\n", 1, "magic"),
    ("CMAP1\nshouting\n0 0\n1 1 1 1 1 1 0 0\n1\n", 2, "shouting"),
    ("CMAP1\nspeaking\n0\n1 1 1 1 1 1 0 0\n1\n", 3, "wind"),
    ("CMAP1\nspeaking\n0 0\n1 1 1 1 1\n1\n", 4, "nx ny nt"),
    ("CMAP1\nspeaking\n0 0\n2 1 2 1 1 1 0 0\n1 1\n", 6, "truncated"),
    ("CMAP1\nspeaking\n0 0\n2 1 1 1 1 1 0 0\n1 1\n1 1\n", 6, "after the last row"),
    ("CMAP1\nspeaking\n0 0\n2 1 1 1 1 1 0 0\n1\n", 5, "expected 2 values"),
    ("CMAP1\nspeaking\n0 0\n2 1 1 1 1 1 0 0\n1 x\n", 5, "non-numeric"),
    ("CMAP1\nspeaking\n0 0\n2 1 1 1 1 1 0 0\n1 nan\n", 5, "non-finite"),
])
def test_parse_errors(text, line, what):
    with pytest.raises(MapFormatError, match=what) as info:
        parse_map(text, "x.cmap")
    assert info.value.lineno == line


def test_values_beyond_cutoff_zeroed_at_load():
    g = GridSpec(x0=0.0, y0=0.0, nx=2, ny=1, dx=5.0, dy=1.0, nt=1, dtau=1.0)
    m = parse_map(f"CMAP1\nspeaking\n0 0\n{2} 1 1 5.0 1.0 1.0 0.0 0.0\n1.0 3.0\n")
    np.testing.assert_array_equal(m.values[0, 0], [1.0, 0.0])
    assert m.grid == g


def test_library_layout_and_load(tmp_path):
    lib = MapLibrary.uniform(
        lambda mode, s, a: generate_surrogate_map(mode, (s * math.cos(math.radians(a)), s * math.sin(math.radians(a))), SMALL)
        if mode is SPEAKING else None
    )
    files = write_library(lib, tmp_path)
    assert len(files) == 60
    assert (tmp_path / "speaking" / map_filename(0.25, 90)).exists()
    assert map_filename(0.25, 90) == "w0.25_a90.cmap" and map_filename(2.0, 0) == "w2_a0.cmap"
    back = load_library(tmp_path)
    assert back.modes == [SPEAKING]
    for s, a in library_keys():
        assert back.get(SPEAKING, s, a) == lib.get(SPEAKING, s, a)
    assert nearest_map(back, SPEAKING, (0.0, 0.0)) == lib.get(SPEAKING, 0.0, 0)
    assert nearest_map(back, SPEAKING, (0.0, -0.4)) == lib.get(SPEAKING, 0.5, 270)
    stack, grid = back.stack(SPEAKING)
    assert stack.shape == (60, 5, 11, 11) and grid == SMALL
    np.testing.assert_array_equal(stack[1 * 12 + 3], lib.get(SPEAKING, 0.25, 90).values)


def test_incomplete_library_rejected_at_load(tmp_path):
    lib = MapLibrary.uniform(lambda mode, s, a: generate_surrogate_map(mode, (0, 0), SMALL) if mode is SPEAKING else None)
    write_library(lib, tmp_path)
    (tmp_path / "speaking" / "w1_a150.cmap").unlink()
    with pytest.raises(IncompleteLibrary, match="w1_a150.cmap"):
        load_library(tmp_path)
    with pytest.raises(IncompleteLibrary):
        MapLibrary({})
