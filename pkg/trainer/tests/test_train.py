import numpy as np
import pytest
import torch

from grid_dataset import make_dataset
from tiny_transformer import ArchConfig, TinyTransformer
from train import TrainConfig, main, train


def small_arch():
    return ArchConfig(n_layers=1, n_heads=2, d_model=16, d_ff=32, vocab_size=16,
                      n_classes=4, max_seq_len=65, grid_rows=8, grid_cols=8)


class TestTrainConfig:
    def test_zero_dropout_rejected(self):
        with pytest.raises(ValueError, match="condition_dropout"):
            TrainConfig(arch=small_arch(), condition_dropout=0.0)

    def test_full_dropout_rejected(self):
        with pytest.raises(ValueError, match="condition_dropout"):
            TrainConfig(arch=small_arch(), condition_dropout=1.0)

    def test_bad_learning_rate(self):
        with pytest.raises(ValueError):
            TrainConfig(arch=small_arch(), learning_rate=0.0)

    def test_from_json(self, tmp_path):
        import json

        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({
            "model": {"n_layers": 1, "n_heads": 2, "d_model": 16, "d_ff": 32,
                      "vocab_size": 16, "n_classes": 4, "max_seq_len": 65,
                      "grid_rows": 8, "grid_cols": 8},
            "dataset_size": 100, "epochs": 1, "batch_size": 32,
            "learning_rate": 0.001, "condition_dropout": 0.2, "seed": 5,
        }))
        cfg = TrainConfig.from_json(path)
        assert cfg.arch.d_model == 16
        assert cfg.condition_dropout == 0.2


class TestTraining:
    def test_smoke_train_and_engine_load(self, tmp_path):
        """One short run: exports a checkpoint the decode engine accepts."""
        from guided_decode import load_checkpoint

        cfg = TrainConfig(arch=small_arch(), dataset_size=400, epochs=1,
                          batch_size=64, learning_rate=3e-3,
                          condition_dropout=0.1, seed=0)
        dataset = tmp_path / "grids.csv"
        ckpt = tmp_path / "model.scfg"
        make_dataset(dataset, cfg.dataset_size, cfg.seed)
        report = train(cfg, dataset, ckpt)
        assert np.isfinite(report["final_loss"])
        config, params = load_checkpoint(ckpt)  # raises on any defect
        assert config.d_model == 16

    def test_divergence_raises(self, tmp_path):
        cfg = TrainConfig(arch=small_arch(), dataset_size=200, epochs=3,
                          batch_size=64, learning_rate=1e30,
                          condition_dropout=0.1, seed=0)
        dataset = tmp_path / "grids.csv"
        make_dataset(dataset, cfg.dataset_size, cfg.seed)
        with pytest.raises(RuntimeError, match="diverged"):
            train(cfg, dataset, tmp_path / "model.scfg")

    def test_cli_error_exit(self, tmp_path, capsys):
        import json

        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "model": {"n_layers": 1, "n_heads": 2, "d_model": 16, "d_ff": 32,
                      "vocab_size": 16, "n_classes": 4, "max_seq_len": 65,
                      "grid_rows": 8, "grid_cols": 8},
            "condition_dropout": 0.0,
        }))
        assert main(["--config", str(bad), "--out", str(tmp_path / "m.scfg")]) == 1
        assert "condition_dropout" in capsys.readouterr().err


class TestArchitectureBits:
    def test_causal_mask(self):
        torch.manual_seed(0)
        arch = small_arch()
        model = TinyTransformer(arch)
        toks = torch.randint(0, 16, (1, 10))
        with torch.no_grad():
            base = model(toks)
            toks2 = toks.clone()
            toks2[0, -1] = (toks2[0, -1] + 1) % 16
            changed = model(toks2)
        assert torch.allclose(base[0, :9], changed[0, :9], atol=1e-6)

    def test_logits_cover_image_vocab(self):
        arch = small_arch()
        model = TinyTransformer(arch)
        with torch.no_grad():
            out = model(torch.zeros(2, 5, dtype=torch.long))
        assert out.shape == (2, 5, arch.vocab_size)
