import numpy as np
import pytest
from conftest import CONFIGS, DEMO, write

from synergy.cli import main
from synergy.config import load_config, parse_config_text
from synergy.dataio import load_representation_table
from synergy.ensemble import read_ensemble, write_predictions
from synergy.errors import ConfigError
from synergy.learners import FcnnConfig, ForestConfig, GbmConfig, GnnConfig

DATA = f"""[data]
synergy = {DEMO / 'synergy.csv'}
drug_table = {DEMO / 'drugs.csv'}
cell_table = {DEMO / 'cells.csv'}
structures = {DEMO / 'structures.csv'}
"""


def cfg_file(tmp_path, model, extra="", name="run.cfg"):
    return write(tmp_path / name, DATA + "\n[model]\n" + model + "\n" + extra)


class TestConfig:
    def test_demo_configs_validate(self):
        for name in ("demo_cv.cfg", "demo_fcnn.cfg", "demo_gnn.cfg"):
            cfg = load_config(DEMO / name)
            assert cfg.synergy.exists()

    def test_gbm_echo(self):
        cfg = load_config(DEMO / "demo_cv.cfg")
        assert cfg.kind == "gbm"
        assert cfg.model_config == GbmConfig(100, 0.1, cfg.model_config.tree)
        assert cfg.model_config.tree.max_depth == 2
        assert cfg.folds == 5

    def test_dropout_out_of_range_names_field(self, tmp_path):
        p = cfg_file(tmp_path, "kind = fcnn\nhidden = 8, 4\ndropout = 1.5")
        with pytest.raises(ConfigError) as info:
            load_config(p)
        assert info.value.field == "dropout"
        assert info.value.line == DATA.count("\n") + 5  # blank, [model], kind, hidden, dropout

    @pytest.mark.parametrize(
        "text, field",
        [
            ("[model]\nkind = gbm\nbogus = 1\n", "bogus"),
            ("[model]\nkind = gbm\ndropout = 0.1\n", "dropout"),
            ("[model]\nkind = gbm\nmax_depth = two\n", "max_depth"),
            ("[model]\nkind = fcnn\nhidden = 5\n", "hidden"),
            ("[model]\nkind = enet\nalpha = -1\n", "alpha"),
            ("[model]\nkind = gbm\nkind = rf\n", "kind"),
            ("[cv]\nstd = weird\n", "std"),
            ("[data]\nsynergy = /nonexistent/file.csv\n", "synergy"),
        ],
    )
    def test_field_errors(self, tmp_path, text, field):
        with pytest.raises(ConfigError) as info:
            load_config(write(tmp_path / "c.cfg", text))
        assert info.value.field == field
        assert info.value.line is not None

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config_text("[nope]\nx = 1\n")

    def test_seed_override(self, tmp_path):
        cfg = load_config(cfg_file(tmp_path, "kind = rf\nseed = 3"), seed_override=9)
        assert cfg.model_config.seed == 9 and cfg.cv_seed == 9


class TestShippedConfigs:
    def load(self, name):
        return load_config(CONFIGS / name, check_paths=False)

    def test_cdr_fcnn(self):
        cfg = self.load("cdr_fcnn.cfg")
        assert cfg.model_config.epochs == 455
        assert cfg.model_config.hidden == (3000, 1500)
        assert cfg.model_config.dropout == 0.4

    @pytest.mark.parametrize("name", ["cdr_gb.cfg", "chemr_gb.cfg"])
    def test_gb(self, name):
        cfg = self.load(name)
        assert isinstance(cfg.model_config, GbmConfig)
        assert cfg.model_config.tree.max_depth == 6 and cfg.model_config.learning_rate == 0.05

    def test_gnn(self):
        cfg = self.load("gnnr_fcnn.cfg")
        m = cfg.model_config
        assert isinstance(m, GnnConfig)
        assert (m.epochs, m.radius, m.embed_dim, m.layers, m.head.hidden) == (1000, 2, 25, 3, (3000, 1500))

    def test_all_parse(self):
        for path in sorted(CONFIGS.glob("*.cfg")):
            cfg = load_config(path, check_paths=False)
            assert isinstance(cfg.model_config, (GbmConfig, FcnnConfig, GnnConfig, ForestConfig)) or cfg.kind == "enet"


def run(*argv):
    return main([str(a) for a in argv])


class TestCli:
    def test_validate(self, capsys):
        assert run("validate", "--config", DEMO / "demo_cv.cfg") == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_config_exit_2(self, tmp_path, capsys):
        p = cfg_file(tmp_path, "kind = fcnn\ndropout = 1.5")
        assert run("validate", "--config", p) == 2
        assert "`dropout`" in capsys.readouterr().err

    def test_cv_bad_dropout_exit_2(self, tmp_path):
        p = cfg_file(tmp_path, "kind = fcnn\ndropout = 1.5")
        assert run("cv", "--config", p, "--out", tmp_path / "o") == 2

    def test_missing_config_flag(self, tmp_path):
        assert run("cv", "--out", tmp_path) == 2

    def test_runtime_failure_exit_1(self, tmp_path):
        bad = write(tmp_path / "syn.csv", "drug_a,drug_b,cell_line,score\nd00,d01,nocell,1.0\n" * 6)
        p = write(tmp_path / "c.cfg", DATA.replace(str(DEMO / "synergy.csv"), str(bad))
                  + "[model]\nkind = tree\n[cv]\nfolds = 2\n")
        assert run("cv", "--config", p, "--out", tmp_path / "o") == 1

    def test_cv_outputs_and_determinism(self, tmp_path):
        assert run("cv", "--config", DEMO / "demo_cv.cfg", "--out", tmp_path / "a") == 0
        assert run("cv", "--config", DEMO / "demo_cv.cfg", "--out", tmp_path / "b", "--threads", "3") == 0
        report = (tmp_path / "a" / "report.csv").read_text()
        assert len(report.splitlines()) == 7 and report.startswith("fold,mse,pearson\n")
        for name in ("report.csv", "predictions.csv", "targets.csv", "folds.csv", "manifest_cv.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_train_predict_roundtrip(self, tmp_path):
        p = cfg_file(tmp_path, "kind = gbm\nn_estimators = 5\nmax_depth = 2")
        assert run("train", "--config", p, "--out", tmp_path / "m") == 0
        assert (tmp_path / "m" / "normalizer.csv").exists()
        assert run("predict", "--config", p, "--model", tmp_path / "m" / "model.bin", "--out", tmp_path / "p") == 0
        lines = (tmp_path / "p" / "predictions.csv").read_text().splitlines()
        assert lines[0] == "row_id,prediction" and len(lines) == 1 + 2 * 198

    def test_ensemble_perfect_plus_noise(self, tmp_path):
        rng = np.random.default_rng(0)
        y = rng.normal(size=40)
        write_predictions(y, tmp_path / "y.csv", column="target")
        write_predictions(y, tmp_path / "perfect.csv")
        write_predictions(rng.normal(size=40), tmp_path / "noise.csv")
        p = write(tmp_path / "e.cfg", f"[ensemble]\ntargets = {tmp_path / 'y.csv'}\n[ensemble.members]\n"
                  f"noise = {tmp_path / 'noise.csv'}\nperfect = {tmp_path / 'perfect.csv'}\n")
        assert run("ensemble", "--config", p, "--out", tmp_path / "o") == 0
        model = read_ensemble(tmp_path / "o" / "ensemble.txt")
        assert model.member_ids == ("perfect",) and model.weights == (1.0,)

    def test_ensemble_single_member(self, tmp_path):
        write_predictions(np.arange(5.0), tmp_path / "y.csv", column="target")
        write_predictions(np.arange(5.0) + 1, tmp_path / "a.csv")
        p = write(tmp_path / "e.cfg", f"[ensemble]\ntargets = {tmp_path / 'y.csv'}\n[ensemble.members]\n"
                  f"CDR^FCNN = {tmp_path / 'a.csv'}\n")
        assert run("ensemble", "--config", p, "--out", tmp_path / "o") == 0
        assert (tmp_path / "o" / "ensemble.txt").read_text().splitlines()[0] == "CDR^FCNN 1.0"

    def test_ensemble_misaligned_exit_1(self, tmp_path, capsys):
        write_predictions(np.arange(5.0), tmp_path / "y.csv", column="target")
        write_predictions(np.arange(4.0), tmp_path / "a.csv")
        p = write(tmp_path / "e.cfg", f"[ensemble]\ntargets = {tmp_path / 'y.csv'}\n[ensemble.members]\n"
                  f"a = {tmp_path / 'a.csv'}\n")
        assert run("ensemble", "--config", p, "--out", tmp_path / "o") == 1
        assert "4 rows" in capsys.readouterr().err

    def test_embed_width_and_reload(self, tmp_path):
        p = cfg_file(tmp_path, "kind = gnn\nembed_dim = 25\nradius = 2\nlayers = 3\nhidden = 8, 4\nepochs = 1\n"
                               "learning_rate = 0.0001")
        assert run("train", "--config", p, "--out", tmp_path / "m") == 0
        model = tmp_path / "m" / "model.bin"
        assert run("embed", "--config", p, "--model", model, "--out", tmp_path / "e1") == 0
        assert run("embed", "--config", p, "--model", model, "--out", tmp_path / "e2") == 0
        text = (tmp_path / "e1" / "gnnr.csv").read_text()
        assert all(len(line.split(",")) == 26 for line in text.splitlines())
        assert text == (tmp_path / "e2" / "gnnr.csv").read_text()
        table = load_representation_table(tmp_path / "e1" / "gnnr.csv", "GNNR")
        assert table.dim == 25 and len(table) == 12

    def test_embed_bad_structure_names_drug(self, tmp_path, capsys):
        p = cfg_file(tmp_path, "kind = gnn\nembed_dim = 3\nhidden = 4, 2\nepochs = 1")
        assert run("train", "--config", p, "--out", tmp_path / "m") == 0
        bad = write(tmp_path / "s.csv", "id,smiles\nweird_drug,C(C\n")
        p2 = write(tmp_path / "e.cfg", f"[data]\nstructures = {bad}\n[embed]\nmodel = {tmp_path / 'm' / 'model.bin'}\n")
        assert run("embed", "--config", p2, "--out", tmp_path / "e") == 1
        assert "weird_drug" in capsys.readouterr().err

    def test_report(self, tmp_path):
        rng = np.random.default_rng(0)
        write_predictions(rng.normal(size=150), tmp_path / "p.csv")
        write_predictions(rng.normal(size=150), tmp_path / "t.csv", column="target")
        args = ["report", "--predictions", tmp_path / "p.csv", "--targets", tmp_path / "t.csv", "--seed", "4"]
        assert run(*args, "--out", tmp_path / "a") == 0
        assert run(*args, "--out", tmp_path / "b") == 0
        svg = (tmp_path / "a" / "report.svg").read_bytes()
        assert svg == (tmp_path / "b" / "report.svg").read_bytes()
        assert b"<svg" in svg and b"Targets" in svg
        assert run(*args, "--n", "0", "--out", tmp_path / "c") == 2
        assert run(*args, "--n", "151", "--out", tmp_path / "c") == 2
        assert run(*args[:-2], "--seed", "5", "--out", tmp_path / "d") == 0
        assert (tmp_path / "d" / "report.svg").read_bytes() != svg
