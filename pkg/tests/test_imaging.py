import numpy as np
import pytest
from oracles import naive_bilateral

from opinionseg.imaging import (
    LabelMap,
    bilateral_filter,
    densify_labels,
    label_map_from_clusters,
    label_map_from_text,
    label_map_to_text,
    load_image,
    morph_smooth,
    paint_label_map,
    read_label_map,
    render_segmentation,
    save_image,
    write_label_map,
)
from opinionseg.model import Population


# --- load / save -----------------------------------------------------------


def test_png_round_trip_grayscale(tmp_path):
    rng = np.random.default_rng(0)
    pixels = rng.integers(0, 256, (9, 7), dtype=np.uint8)
    path = tmp_path / "gray.png"
    save_image(path, pixels)
    pop = load_image(path)
    assert pop.geometry == (7, 9)
    assert pop.d == 1
    assert np.array_equal(np.round(pop.grid()[:, :, 0] * 255).astype(np.uint8), pixels)


def test_png_round_trip_rgb(tmp_path):
    rng = np.random.default_rng(1)
    pixels = rng.integers(0, 256, (5, 6, 3), dtype=np.uint8)
    path = tmp_path / "colour.png"
    save_image(path, pixels)
    pop = load_image(path)
    assert pop.d == 3
    assert np.array_equal(np.round(pop.grid() * 255).astype(np.uint8), pixels)


def test_save_image_validates():
    with pytest.raises(ValueError):
        save_image("x.png", np.zeros((4, 4), dtype=np.float64))
    with pytest.raises(ValueError):
        save_image("x.png", np.zeros((4, 4, 2), dtype=np.uint8))


def test_load_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_image(tmp_path / "nope.png")


# --- bilateral filter --------------------------------------------------------


@pytest.mark.parametrize("d", [1, 3])
def test_bilateral_matches_naive_loops(d):
    rng = np.random.default_rng(3)
    grid = rng.random((10, 12, d))
    pop = Population.from_grid(grid)
    got = bilateral_filter(pop, sigma_spatial=1.0, sigma_range=0.2, radius=2)
    want = naive_bilateral(grid, 1.0, 0.2, 2)
    assert got.grid() == pytest.approx(want, abs=1e-12)


def test_bilateral_constant_image_unchanged():
    pop = Population.from_grid(np.full((8, 8), 0.37))
    out = bilateral_filter(pop, sigma_spatial=2.0, sigma_range=0.1)
    assert out.grid() == pytest.approx(0.37, abs=1e-13)


def test_bilateral_preserves_step_edge():
    grid = np.zeros((10, 10))
    grid[:, 5:] = 0.8
    out = bilateral_filter(Population.from_grid(grid), sigma_spatial=2.0,
                           sigma_range=0.05, radius=4).grid()[:, :, 0]
    # range weight exp(-0.8^2 / (2*0.05^2)) is ~1e-56: the edge survives
    assert np.abs(out[:, :5]).max() < 1e-9
    assert np.abs(out[:, 5:] - 0.8).max() < 1e-9


def test_bilateral_smooths_noise():
    rng = np.random.default_rng(9)
    grid = np.clip(0.5 + rng.normal(0, 0.05, (16, 16)), 0, 1)
    out = bilateral_filter(Population.from_grid(grid), sigma_spatial=2.0, sigma_range=0.2)
    assert out.grid().std() < grid.std() * 0.5


def test_bilateral_validates():
    pop = Population.from_grid(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        bilateral_filter(pop, sigma_spatial=-1.0)
    with pytest.raises(ValueError):
        bilateral_filter(pop, sigma_range=0.0)
    with pytest.raises(ValueError):
        bilateral_filter(pop, radius=0)
    with pytest.raises(ValueError):
        bilateral_filter(Population(np.zeros(4)))


# --- LabelMap and its file format --------------------------------------------


def test_label_map_validation():
    with pytest.raises(ValueError):
        LabelMap(np.zeros((2, 2), dtype=np.float64), 1)
    with pytest.raises(ValueError):
        LabelMap(np.array([[0, 1], [2, 1]]), 2)
    with pytest.raises(ValueError):
        LabelMap(np.array([[-1, 0]]), 2)
    with pytest.raises(ValueError):
        LabelMap(np.zeros(4, dtype=np.int64), 1)


def test_label_map_text_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    labels = rng.integers(0, 4, (6, 9))
    lmap = LabelMap(labels, 4)
    path = tmp_path / "labels.txt"
    write_label_map(path, lmap)
    back = read_label_map(path)
    assert back.num_labels == 4
    assert np.array_equal(back.labels, labels)


def test_label_map_text_format_layout():
    lmap = LabelMap(np.array([[0, 1, 1], [2, 2, 0]]), 3)
    text = label_map_to_text(lmap)
    lines = text.splitlines()
    assert lines[0] == "3 2 3"
    assert lines[1] == "0 1 1"
    assert lines[2] == "2 2 0"


def test_label_map_text_rejects_garbage():
    with pytest.raises(ValueError):
        label_map_from_text("")
    with pytest.raises(ValueError):
        label_map_from_text("2 2\n0 0\n0 0\n")
    with pytest.raises(ValueError):
        label_map_from_text("2 2 1\n0 0 0\n")
    with pytest.raises(ValueError):
        label_map_from_text("2 2 1\n0 x\n0 0\n")
    with pytest.raises(ValueError):
        label_map_from_text("2 2 1\n0 0\n0 5\n")


def test_read_label_map_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_label_map(tmp_path / "missing.txt")


# --- morph_smooth -------------------------------------------------------------


def test_morph_absorbs_single_speck():
    labels = np.zeros((8, 8), dtype=np.int64)
    labels[4, 4] = 1
    out = morph_smooth(LabelMap(labels, 2), min_area=2)
    assert np.all(out.labels == 0)


def test_morph_two_specks_absorbed():
    labels = np.zeros((10, 10), dtype=np.int64)
    labels[2, 2] = 1
    labels[7, 7] = 1
    out = morph_smooth(LabelMap(labels, 2), min_area=3)
    assert np.all(out.labels == 0)


def test_morph_keeps_large_components():
    labels = np.zeros((10, 10), dtype=np.int64)
    labels[:, 5:] = 1
    out = morph_smooth(LabelMap(labels, 2), min_area=10)
    assert np.array_equal(out.labels, labels)


def test_morph_assigns_to_largest_neighbour():
    # pixel at the junction of a big region (0) and a mid region (2)
    labels = np.zeros((6, 9), dtype=np.int64)
    labels[:, 6:] = 2
    labels[3, 5] = 1
    out = morph_smooth(LabelMap(labels, 3), min_area=2)
    assert out.labels[3, 5] == 0  # region 0 is larger than region 2


def test_morph_counts_diagonal_adjacency():
    labels = np.zeros((5, 5), dtype=np.int64)
    labels[0, :] = 1
    labels[1, 1] = 2  # touches row 0 diagonally and orthogonally
    out = morph_smooth(LabelMap(labels, 3), min_area=2)
    assert out.labels[1, 1] in (0, 1)
    assert 2 not in out.labels


def test_morph_never_invents_labels_and_never_splits():
    rng = np.random.default_rng(12)
    labels = rng.integers(0, 4, (20, 20))
    lmap = LabelMap(labels, 4)
    out = morph_smooth(lmap, min_area=5)
    assert set(np.unique(out.labels)) <= set(np.unique(labels))

    from scipy import ndimage

    def comp_count(arr):
        total = 0
        for val in np.unique(arr):
            _, n = ndimage.label(arr == val, structure=np.ones((3, 3)))
            total += n
        return total

    assert comp_count(out.labels) <= comp_count(labels)


def test_morph_min_area_one_is_identity():
    rng = np.random.default_rng(13)
    labels = rng.integers(0, 3, (7, 7))
    out = morph_smooth(LabelMap(labels, 3), min_area=1)
    assert np.array_equal(out.labels, labels)


def test_densify_reports_kept_ids():
    labels = np.array([[0, 2], [2, 0]])
    dense, kept = densify_labels(LabelMap(labels, 3))
    assert kept.tolist() == [0, 2]
    assert dense.num_labels == 2
    assert np.array_equal(dense.labels, np.array([[0, 1], [1, 0]]))


# --- painting ------------------------------------------------------------------


def test_paint_rounds_half_up():
    lmap = LabelMap(np.array([[0, 1]]), 2)
    out = paint_label_map(lmap, np.array([[0.5], [1.0]]))
    assert out.dtype == np.uint8
    assert out.tolist() == [[128, 255]]


def test_paint_byte_lossless_round_trip():
    rng = np.random.default_rng(21)
    values = rng.integers(0, 256, 40, dtype=np.uint8)
    centres = (values / 255.0)[:, None]
    lmap = LabelMap(np.arange(40).reshape(5, 8), 40)
    painted = paint_label_map(lmap, centres)
    assert np.array_equal(painted.ravel(), values)


def test_paint_colour_centres():
    lmap = LabelMap(np.array([[0, 1]]), 2)
    centres = np.array([[0.0, 0.5, 1.0], [0.2, 0.4, 0.8]])
    out = paint_label_map(lmap, centres)
    assert out.shape == (1, 2, 3)
    assert out[0, 0].tolist() == [0, 128, 255]
    assert out[0, 1].tolist() == [51, 102, 204]


def test_paint_validates_centre_coverage():
    lmap = LabelMap(np.array([[0, 1, 2]]), 3)
    with pytest.raises(ValueError):
        paint_label_map(lmap, np.array([[0.1], [0.2]]))


def test_render_segmentation_wires_geometry():
    pop = Population.from_grid(np.array([[0.2, 0.2], [0.8, 0.8]]))
    labels = np.array([0, 0, 1, 1])
    out = render_segmentation(pop, labels, np.array([[0.2], [0.8]]))
    assert out.tolist() == [[51, 51], [204, 204]]


def test_label_map_from_clusters_checks_size():
    with pytest.raises(ValueError):
        label_map_from_clusters(np.zeros(5, dtype=np.int64), 1, (2, 2))
