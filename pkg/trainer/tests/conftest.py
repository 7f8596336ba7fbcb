import sys
from pathlib import Path

import pytest

TRAINER_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(TRAINER_ROOT))

from grid_dataset import make_dataset
from tiny_transformer import ArchConfig
from train import TrainConfig, train


@pytest.fixture(scope="session")
def arch():
    return ArchConfig(n_layers=2, n_heads=2, d_model=64, d_ff=256, vocab_size=16,
                      n_classes=4, max_seq_len=65, grid_rows=8, grid_cols=8)


@pytest.fixture(scope="session")
def trained(arch, tmp_path_factory):
    """Train once per session; several tests share the result."""
    root = tmp_path_factory.mktemp("trained")
    dataset = root / "grids_train.csv"
    checkpoint = root / "model.scfg"
    cfg = TrainConfig(arch=arch, dataset_size=8000, epochs=3, batch_size=128,
                      learning_rate=3e-3, condition_dropout=0.1, seed=0)
    make_dataset(dataset, cfg.dataset_size, cfg.seed)
    report = train(cfg, dataset, checkpoint)
    return {"config": cfg, "checkpoint": checkpoint, "dataset": dataset,
            "report": report}
