import numpy as np
import pytest

from grid_dataset import (
    BAND_SIZE,
    GRID_CELLS,
    IN_BAND_PROB,
    N_CLASSES,
    VOCAB_SIZE,
    band,
    load_dataset,
    make_dataset,
)


class TestMakeDataset:
    def test_line_format(self, tmp_path):
        path = tmp_path / "grids.csv"
        make_dataset(path, 1000, seed=7)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1000
        for line in lines[:20]:
            fields = line.split(",")
            assert len(fields) == 1 + GRID_CELLS
            assert 0 <= int(fields[0]) < N_CLASSES

    def test_regeneration_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        make_dataset(a, 500, seed=7)
        make_dataset(b, 500, seed=7)
        assert a.read_bytes() == b.read_bytes()

    def test_in_band_fraction(self, tmp_path):
        path = tmp_path / "grids.csv"
        make_dataset(path, 2000, seed=1)
        classes, grids = load_dataset(path)
        in_band = np.mean([
            np.isin(grid, band(cls)).mean() for cls, grid in zip(classes, grids)
        ])
        assert abs(in_band - IN_BAND_PROB) < 0.01

    def test_size_validated(self, tmp_path):
        with pytest.raises(ValueError):
            make_dataset(tmp_path / "x.csv", 0, seed=0)

    def test_constants_match_decode_engine(self):
        from guided_decode.grammar import GridGrammar

        g = GridGrammar()
        assert (g.n_classes, g.vocab_size, g.in_band_prob) == (
            N_CLASSES, VOCAB_SIZE, IN_BAND_PROB,
        )
        assert g.band_size == BAND_SIZE
        assert g.n_cells == GRID_CELLS

    def test_readable_by_decode_engine(self, tmp_path):
        from guided_decode.grammar import class_accuracy, read_grids

        path = tmp_path / "grids.csv"
        make_dataset(path, 400, seed=3)
        rows = read_grids(path)
        assert len(rows) == 400
        assert class_accuracy([(tokens, cls) for cls, tokens in rows]) == 1.0
