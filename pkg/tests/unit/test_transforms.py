"""
Unit Tests for Input Images and Transforms
==========================================
"""

import numpy as np
import pytest
from PIL import Image

from src.cli.transforms import apply_transform, mean_pixel, read_input_image
from src.core.nn.datasets import DatasetFormatError
from src.models.schemas import Transform, TransformKind


@pytest.fixture
def grid():
    return np.arange(1.0, 17.0).reshape(1, 4, 4)


@pytest.mark.unit
class TestTransforms:
    """Test rotations, flips and crops."""

    def test_none_copies(self, grid):
        out = apply_transform(grid, Transform())
        np.testing.assert_array_equal(out, grid)
        assert out is not grid

    def test_rot90_counter_clockwise(self):
        x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
        out = apply_transform(x, Transform.parse("rot90"))
        np.testing.assert_array_equal(out, [[[2.0, 4.0], [1.0, 3.0]]])

    def test_full_turn(self, grid):
        out = grid
        for _ in range(4):
            out = apply_transform(out, Transform.parse("rot90"))
        np.testing.assert_array_equal(out, grid)

    def test_rot180_and_rot270(self, grid):
        np.testing.assert_array_equal(
            apply_transform(grid, Transform.parse("rot180")), grid[:, ::-1, ::-1]
        )
        three = apply_transform(grid, Transform.parse("rot270"))
        back = apply_transform(three, Transform.parse("rot90"))
        np.testing.assert_array_equal(back, grid)

    def test_fliph(self, grid):
        out = apply_transform(grid, Transform.parse("fliph"))
        np.testing.assert_array_equal(out[0, 0], [4.0, 3.0, 2.0, 1.0])
        assert out.flags["C_CONTIGUOUS"]

    def test_crop_centres_region(self, grid):
        out = apply_transform(grid, Transform.parse("crop(0,0,2,2)"), fill=0.5)
        expected = np.full((1, 4, 4), 0.5)
        expected[0, 1:3, 1:3] = [[1.0, 2.0], [5.0, 6.0]]
        np.testing.assert_array_equal(out, expected)

    def test_crop_uses_x_then_y(self, grid):
        out = apply_transform(grid, Transform.parse("crop(2, 0, 2, 4)"))
        np.testing.assert_array_equal(out[0, :, 1:3], grid[0, :, 2:4])
        np.testing.assert_array_equal(out[0, :, 0], 0.0)

    def test_crop_clipped_to_image(self, grid):
        out = apply_transform(grid, Transform.parse("crop(3,3,5,5)"))
        assert out.shape == grid.shape
        assert np.count_nonzero(out) == 1

    def test_crop_outside_image(self, grid):
        with pytest.raises(ValueError, match="outside"):
            apply_transform(grid, Transform.parse("crop(9,9,2,2)"))


@pytest.mark.unit
class TestTransformParsing:
    """Test the --transform syntax."""

    def test_kinds(self):
        assert Transform.parse("ROT90").kind == TransformKind.ROT90
        assert Transform.parse(" none ").kind == TransformKind.NONE

    def test_crop(self):
        transform = Transform.parse("crop(1, 2, 3, 4)")
        assert transform.kind == TransformKind.CROP
        assert transform.crop == (1, 2, 3, 4)

    @pytest.mark.parametrize("text", ["crop", "crop(1,2,3)", "crop[1,2,3,4]", "rot45"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            Transform.parse(text)

    def test_empty_crop_rectangle(self):
        with pytest.raises(ValueError, match="invalid crop rectangle"):
            Transform.parse("crop(0,0,0,2)")


@pytest.mark.unit
class TestInputImages:
    """Test reading explanation inputs through Pillow."""

    def test_grayscale_png(self, tmp_path):
        path = tmp_path / "g.png"
        Image.fromarray(np.array([[0, 255], [51, 102]], dtype=np.uint8)).save(path)
        x = read_input_image(path, 1)
        assert x.shape == (1, 2, 2)
        np.testing.assert_allclose(x[0], [[0.0, 1.0], [0.2, 0.4]])

    def test_rgb_channels_first(self, tmp_path):
        path = tmp_path / "c.png"
        pixels = np.zeros((2, 3, 3), dtype=np.uint8)
        pixels[..., 2] = 255
        Image.fromarray(pixels).save(path)
        x = read_input_image(path, 3)
        assert x.shape == (3, 2, 3)
        np.testing.assert_array_equal(x[2], 1.0)
        np.testing.assert_array_equal(x[0], 0.0)

    def test_rgb_to_gray(self, tmp_path):
        path = tmp_path / "c.ppm"
        Image.fromarray(np.full((2, 2, 3), 255, dtype=np.uint8)).save(path)
        np.testing.assert_array_equal(read_input_image(path, 1), 1.0)

    def test_unreadable(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"not an image")
        with pytest.raises(DatasetFormatError, match="cannot read image"):
            read_input_image(path, 1)

    def test_unsupported_channels(self, tmp_path):
        with pytest.raises(ValueError, match="1 or 3"):
            read_input_image(tmp_path / "x.png", 2)

    def test_mean_pixel(self):
        assert mean_pixel(None) == 0.0
        assert mean_pixel(np.array([0.0, 1.0, 0.5])) == pytest.approx(0.5)
