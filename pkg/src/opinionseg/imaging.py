"""Image handling: loading, denoising, label maps, rendering.

Images become populations of pixel agents (grayscale -> scalar
opinions, colour -> 3-component) scaled to [0, 1].  An edge-preserving
bilateral prefilter knocks down sensor-style noise before the dynamics
run, and a small morphological cleanup pass absorbs speckle components
from the resulting label map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .model import Population

GRAYSCALE_MODES = ("1", "L", "LA", "I", "I;16", "F")


def load_image(path) -> Population:
    """Read an image file into a pixel population on [0, 1].

    Grayscale-like modes map to scalar opinions, everything else is
    converted to RGB and maps to 3-component opinions.
    """
    with Image.open(path) as img:
        if img.mode in GRAYSCALE_MODES:
            arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return Population.from_grid(arr)


def save_image(path, pixels: np.ndarray) -> None:
    """Write a uint8 (h, w) or (h, w, 3) array as an image file."""
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {pixels.dtype}")
    if pixels.ndim == 2:
        Image.fromarray(pixels, mode="L").save(path)
    elif pixels.ndim == 3 and pixels.shape[2] == 3:
        Image.fromarray(pixels, mode="RGB").save(path)
    else:
        raise ValueError(f"expected (h, w) or (h, w, 3) pixels, got shape {pixels.shape}")


def bilateral_filter(
    pop: Population,
    sigma_spatial: float = 3.0,
    sigma_range: float = 0.1,
    radius: int | None = None,
) -> Population:
    """Edge-preserving smoothing of a pixel population.

    Each output pixel is a weighted mean over the (2r+1)^2 window, with
    Gaussian weights in pixel distance (sigma_spatial) times Gaussian
    weights in value difference (sigma_range, per channel, on the [0, 1]
    scale).  The window is truncated at the border and the weights
    renormalised over the taps that exist, so borders get no padding
    bias.  radius defaults to 3 * sigma_spatial.
    """
    if pop.geometry is None:
        raise ValueError("bilateral filter needs grid geometry")
    if not sigma_spatial > 0.0:
        raise ValueError(f"sigma_spatial must be positive, got {sigma_spatial}")
    if not sigma_range > 0.0:
        raise ValueError(f"sigma_range must be positive, got {sigma_range}")
    if radius is None:
        radius = int(round(3.0 * sigma_spatial))
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")

    grid = pop.grid()
    h, w, d = grid.shape
    accum = np.zeros_like(grid)
    wsum = np.zeros_like(grid)
    inv2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial)
    inv2sr = 1.0 / (2.0 * sigma_range * sigma_range)
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            sw = np.exp(-(dr * dr + dc * dc) * inv2ss)
            r0, r1 = max(0, -dr), min(h, h - dr)
            c0, c1 = max(0, -dc), min(w, w - dc)
            if r0 >= r1 or c0 >= c1:
                continue
            centre = grid[r0:r1, c0:c1]
            shifted = grid[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
            diff = shifted - centre
            wgt = sw * np.exp(-(diff * diff) * inv2sr)
            accum[r0:r1, c0:c1] += wgt * shifted
            wsum[r0:r1, c0:c1] += wgt
    out = accum / wsum
    np.clip(out, 0.0, 1.0, out=out)
    return Population.from_grid(out)


@dataclass
class LabelMap:
    """Integer per-pixel labels on an image grid.

    labels is an (h, w) array of ids in [0, num_labels).  Ids produced
    by this package are dense (every id occurs); maps read back from
    files are only range-checked, since smoothing can retire an id.
    """

    labels: np.ndarray
    num_labels: int

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"labels must be 2-d, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"labels must be integers, got {arr.dtype}")
        if self.num_labels < 1:
            raise ValueError(f"num_labels must be >= 1, got {self.num_labels}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.num_labels):
            raise ValueError(
                f"label values must lie in [0, {self.num_labels}), "
                f"found range [{arr.min()}, {arr.max()}]"
            )
        self.labels = arr.astype(np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def present_ids(self) -> np.ndarray:
        return np.unique(self.labels)


def label_map_from_clusters(labels_flat: np.ndarray, num_labels: int,
                            geometry: tuple[int, int]) -> LabelMap:
    """Reshape flat cluster labels onto the pixel grid."""
    w, h = geometry
    if labels_flat.shape[0] != w * h:
        raise ValueError(
            f"{labels_flat.shape[0]} labels do not fill a {w}x{h} grid"
        )
    return LabelMap(labels_flat.reshape(h, w), num_labels)


def label_map_to_text(lmap: LabelMap) -> str:
    """Label map as text: a 'width height num_labels' header then rows."""
    h, w = lmap.shape
    lines = [f"{w} {h} {lmap.num_labels}"]
    for row in lmap.labels:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def label_map_from_text(text: str, source: str = "<text>") -> LabelMap:
    """Parse the text label-map format written by label_map_to_text."""
    stripped = text.strip()
    if not stripped:
        raise ValueError(f"label map {source} is empty")
    header_line, _, body_text = stripped.partition("\n")
    header = header_line.split()
    if len(header) != 3:
        raise ValueError(f"bad label map header in {source}: {header_line!r}")
    try:
        w, h, num_labels = (int(tok) for tok in header)
    except ValueError as exc:
        raise ValueError(f"bad label map header in {source}: {header_line!r}") from exc
    if w < 1 or h < 1:
        raise ValueError(f"bad label map dimensions in {source}: {w}x{h}")
    body = body_text.split()
    if len(body) != w * h:
        raise ValueError(f"label map {source} has {len(body)} values, expected {w * h}")
    try:
        flat = np.array([int(tok) for tok in body], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"label map {source} contains non-integer values") from exc
    return LabelMap(flat.reshape(h, w), num_labels)


def write_label_map(path, lmap: LabelMap) -> None:
    """Write a label map file in the text format."""
    with open(path, "w") as fh:
        fh.write(label_map_to_text(lmap))


def read_label_map(path) -> LabelMap:
    """Read a label map file in the text format."""
    with open(path) as fh:
        return label_map_from_text(fh.read(), source=str(path))


_STRUCTURE_8 = np.ones((3, 3), dtype=bool)


def _components(labels: np.ndarray):
    """8-connected components of a label image, across all label values.

    Returns (comp_img with ids 1..n_comps, areas indexed by id, the
    label value of each component).
    """
    comp_img = np.zeros(labels.shape, dtype=np.int64)
    comp_label = [0]
    next_id = 0
    for val in np.unique(labels):
        mask = labels == val
        lab, n = ndimage.label(mask, structure=_STRUCTURE_8)
        comp_img[mask] = lab[mask] + next_id
        comp_label.extend([int(val)] * n)
        next_id += n
    areas = np.bincount(comp_img.ravel(), minlength=next_id + 1)
    return comp_img, areas, np.array(comp_label, dtype=np.int64)


def morph_smooth(lmap: LabelMap, min_area: int) -> LabelMap:
    """Absorb label components smaller than min_area into their surroundings.

    Each pass finds the 8-connected components of the label image and
    reassigns every component below min_area to the label of its largest
    adjacent component (ties to the lowest component id), processing
    small components in ascending area order against the pass-start
    state.  Passes repeat until nothing is below min_area or a pass
    changes nothing; a pass cap equal to the initial component count
    guards termination.  Never invents a new label id and never
    increases the component count.  Ids keep their original values (an
    id can vanish entirely); use densify_labels when dense ids are
    needed downstream.
    """
    if min_area < 0:
        raise ValueError(f"min_area must be non-negative, got {min_area}")
    labels = lmap.labels.copy()
    if min_area <= 1:
        return LabelMap(labels, lmap.num_labels)

    comp_img, areas, comp_label = _components(labels)
    for _ in range(len(comp_label)):
        small = [cid for cid in range(1, len(comp_label)) if areas[cid] < min_area]
        if not small:
            break
        small.sort(key=lambda cid: (areas[cid], cid))
        new_labels = labels.copy()
        changed = False
        for cid in small:
            mask = comp_img == cid
            ring = ndimage.binary_dilation(mask, structure=_STRUCTURE_8) & ~mask
            neighbours = np.unique(comp_img[ring])
            neighbours = neighbours[neighbours != 0]
            if neighbours.size == 0:
                continue
            target = min(neighbours, key=lambda nid: (-areas[nid], nid))
            if comp_label[target] != comp_label[cid]:
                new_labels[mask] = comp_label[target]
                changed = True
        if not changed:
            break
        labels = new_labels
        comp_img, areas, comp_label = _components(labels)

    return LabelMap(labels, lmap.num_labels)


def densify_labels(lmap: LabelMap) -> tuple[LabelMap, np.ndarray]:
    """Renumber label ids to be dense, preserving order.

    Returns the renumbered map and the array of original ids that
    survived, so per-id data (cluster centres, masses) can be subset to
    match: new id k corresponds to original id kept[k].
    """
    kept = np.unique(lmap.labels)
    remap = np.zeros(int(kept.max()) + 1, dtype=np.int64)
    remap[kept] = np.arange(kept.size)
    return LabelMap(remap[lmap.labels], int(kept.size)), kept


def paint_label_map(lmap: LabelMap, centres: np.ndarray) -> np.ndarray:
    """Colour each pixel with its cluster centre, as uint8.

    Centres on [0, 1] are scaled by 255 with round-half-up, so a centre
    that came from an unquantised byte value maps back to that byte
    exactly.  Scalar centres yield (h, w), vector centres (h, w, 3).
    """
    centres = np.asarray(centres, dtype=np.float64)
    if centres.ndim != 2:
        raise ValueError(f"centres must be (k, d), got shape {centres.shape}")
    if lmap.labels.max() >= centres.shape[0]:
        raise ValueError(
            f"label map references id {int(lmap.labels.max())} "
            f"but only {centres.shape[0]} centres given"
        )
    bytes_ = np.floor(centres * 255.0 + 0.5)
    bytes_ = np.clip(bytes_, 0, 255).astype(np.uint8)
    painted = bytes_[lmap.labels]
    if painted.shape[2] == 1:
        return painted[:, :, 0]
    return painted


def render_segmentation(pop: Population, labels_flat: np.ndarray,
                        centres: np.ndarray) -> np.ndarray:
    """Paint cluster labels of a pixel population as a uint8 image."""
    if pop.geometry is None:
        raise ValueError("rendering needs grid geometry")
    lmap = label_map_from_clusters(labels_flat, int(centres.shape[0]), pop.geometry)
    return paint_label_map(lmap, centres)
