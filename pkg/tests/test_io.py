#!/usr/bin/env python3
# Grid function serialization: index CSV and the binary dump

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.core.errors import GridMismatchError
from src.core.grid_spectral import Box, GridFunction
from src.utils.io import BINARY_MAGIC, load_binary, read_csv, read_grid_function, save_binary, write_grid_function


@pytest.fixture
def field(rng):
    box = Box(2, 4.0, 8)
    return GridFunction(box, rng.normal(size=box.shape))


def test_csv_header_uses_grid_indices(tmp_path, field):
    path = write_grid_function(field, str(tmp_path / "u.csv"), "abc")
    frame = read_csv(path)
    assert list(frame.columns) == ["index_0", "index_1", "value"]
    assert frame["index_0"].dtype.kind == "i"
    assert (frame.iloc[9]["index_0"], frame.iloc[9]["index_1"]) == (1, 1)
    assert_array_equal(read_grid_function(path, field.box).values, field.values)


def test_csv_rows_may_come_in_any_order(tmp_path, field):
    path = tmp_path / "u.csv"
    write_grid_function(field, str(path), "abc")
    lines = path.read_text(encoding="utf-8").splitlines()
    shuffled = lines[:2] + lines[2:][::-1]
    path.write_text("\n".join(shuffled) + "\n", encoding="utf-8")
    assert_array_equal(read_grid_function(str(path), field.box).values, field.values)


def test_csv_must_cover_the_box(tmp_path, field):
    path = write_grid_function(field, str(tmp_path / "u.csv"), "abc")
    with pytest.raises(GridMismatchError):
        read_grid_function(path, Box(2, 4.0, 16))
    with pytest.raises(GridMismatchError):
        read_grid_function(path, Box(1, 4.0, 64))
    text = (tmp_path / "u.csv").read_text(encoding="utf-8").replace("\r\n7,7,", "\r\n7,6,")
    (tmp_path / "dup.csv").write_text(text, encoding="utf-8")
    with pytest.raises(GridMismatchError):
        read_grid_function(str(tmp_path / "dup.csv"), field.box)


def test_binary_dump_layout(tmp_path, field):
    path = save_binary(field, str(tmp_path / "u.bin"))
    raw = (tmp_path / "u.bin").read_bytes()
    assert raw[:8] == BINARY_MAGIC
    assert_array_equal(np.frombuffer(raw, dtype="<u8", count=3, offset=8), [2, 8, 8])
    assert len(raw) == 8 + 3 * 8 + 64 * 8
    assert_array_equal(load_binary(path, field.box).values, field.values)


def test_binary_dump_checks_dims(tmp_path, field):
    path = save_binary(field, str(tmp_path / "u.bin"))
    with pytest.raises(GridMismatchError):
        # same number of values, different shape
        load_binary(path, Box(1, 4.0, 64))
    with pytest.raises(GridMismatchError):
        load_binary(path, Box(2, 4.0, 16))
    (tmp_path / "bad.bin").write_bytes(b"NOTAGRID" + (tmp_path / "u.bin").read_bytes()[8:])
    with pytest.raises(GridMismatchError):
        load_binary(str(tmp_path / "bad.bin"), field.box)
    (tmp_path / "short.bin").write_bytes((tmp_path / "u.bin").read_bytes()[:-8])
    with pytest.raises(GridMismatchError):
        load_binary(str(tmp_path / "short.bin"), field.box)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
