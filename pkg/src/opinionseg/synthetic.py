"""Synthetic test images with exact ground truth.

These generators back the bundled demo dataset and the test suite:
noisy two-tone scenes where the true segmentation is known by
construction, plus noise-free tone patterns for exercising the epsilon
ladder.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .imaging import save_image
from .model import Population


def two_region_image(
    size: int = 128,
    background_tone: float = 0.2,
    object_tone: float = 0.8,
    noise_sigma: float = 0.05,
    seed: int = 0,
    shape: str = "disk",
) -> tuple[Population, np.ndarray]:
    """A noisy object on a background, with its ground-truth mask.

    The object is a centred disk (or square) covering roughly a third of
    the image side.  Gaussian pixel noise is added and the result
    clipped to [0, 1].  Returns (population, object mask).
    """
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    if shape not in ("disk", "square"):
        raise ValueError(f"shape must be 'disk' or 'square', got {shape!r}")
    rng = np.random.default_rng(seed)
    r = np.arange(size)
    rows, cols = np.meshgrid(r, r, indexing="ij")
    centre = (size - 1) / 2.0
    if shape == "disk":
        radius = 0.3 * size
        mask = (rows - centre) ** 2 + (cols - centre) ** 2 <= radius * radius
    else:
        half = int(round(0.3 * size))
        mask = (np.abs(rows - centre) <= half) & (np.abs(cols - centre) <= half)
    grid = np.where(mask, object_tone, background_tone).astype(np.float64)
    grid += rng.normal(0.0, noise_sigma, size=grid.shape)
    np.clip(grid, 0.0, 1.0, out=grid)
    return Population.from_grid(grid), mask


def banded_image(
    size: int = 64,
    tones: tuple[float, ...] = (0.1, 0.5, 0.9),
    fractions: tuple[float, ...] = (0.45, 0.10, 0.45),
) -> Population:
    """Noise-free horizontal bands, one tone per band.

    Band heights follow the given fractions of the image height (the
    last band absorbs rounding).  Handy for scheduler tests where the
    exact tone gaps decide which ladder round merges what.
    """
    if len(tones) != len(fractions) or not tones:
        raise ValueError("tones and fractions must be equal-length and non-empty")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    grid = np.empty((size, size), dtype=np.float64)
    row = 0
    for tone, frac in zip(tones[:-1], fractions[:-1]):
        height = int(round(frac * size))
        grid[row : row + height] = tone
        row += height
    grid[row:] = tones[-1]
    return Population.from_grid(grid)


def to_uint8(pop: Population) -> np.ndarray:
    """Quantise a pixel population to uint8 with round-half-up."""
    grid = pop.grid()
    bytes_ = np.floor(grid * 255.0 + 0.5).astype(np.uint8)
    if bytes_.shape[2] == 1:
        return bytes_[:, :, 0]
    return bytes_


def write_dataset(directory, n_images: int = 5, size: int = 64, seed: int = 0) -> list[tuple[Path, Path]]:
    """Write a small noisy two-region dataset with masks.

    Produces n_images pairs image_XX.png / image_XX_mask.png,
    alternating disk and square objects with per-image seeds derived
    from the base seed.  Returns the (image, mask) path pairs.
    """
    if n_images < 1:
        raise ValueError(f"n_images must be >= 1, got {n_images}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pairs = []
    for idx in range(n_images):
        shape = "disk" if idx % 2 == 0 else "square"
        pop, mask = two_region_image(size=size, seed=seed + idx, shape=shape)
        img_path = directory / f"image_{idx:02d}.png"
        mask_path = directory / f"image_{idx:02d}_mask.png"
        save_image(img_path, to_uint8(pop))
        save_image(mask_path, (mask.astype(np.uint8) * 255))
        pairs.append((img_path, mask_path))
    return pairs
