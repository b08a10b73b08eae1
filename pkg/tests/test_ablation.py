"""Tests for the ablation matrix and the component gradient checks."""
import pytest

from app.core.errors import ConfigurationError
from app.services.ablation import ABLATION_COLUMNS, SETTINGS, ablation_frame, run_ablation, setting_config
from app.services.corpus import default_correlation_spec, generate_synthetic
from app.services.gradcheck_suite import COMPONENTS, run_gradcheck


class TestSettings:
    def test_every_setting_is_a_valid_config(self, tiny_config):
        for name, flags in SETTINGS.items():
            config = setting_config(tiny_config, name, seed=3)
            assert config.seed == 3
            assert config.lambda_ == tiny_config.lambda_
            assert {key: getattr(config, key) for key in flags} == flags

    def test_weighted_bce_rows_pair_with_wa_rows(self):
        for name, flags in SETTINGS.items():
            if flags["stage1_loss"] == "wbce":
                twin = SETTINGS[name.split("/")[0]]
                assert twin == dict(flags, stage1_loss="wa")
                assert not flags["use_mefl"]

    def test_setting_loss_overrides_base(self, tiny_config):
        base = tiny_config.model_copy(update={"stage1_loss": "wbce"})
        assert setting_config(base, "afg", seed=0).stage1_loss == "wa"
        assert setting_config(tiny_config, "afg/wbce", seed=0).stage1_loss == "wbce"

    def test_unknown_setting(self, tiny_config):
        with pytest.raises(ConfigurationError):
            setting_config(tiny_config, "mefl-only", seed=0)

    def test_rows(self, tiny_corpus, tiny_config):
        rows = run_ablation(tiny_corpus, tiny_config, settings=["backbone/wbce", "afg+mefl+le"], seeds=[0, 1])
        assert [row.setting for row in rows] == ["backbone/wbce", "afg+mefl+le"]
        assert [row.stage1_loss for row in rows] == ["wbce", "wa"]
        for row in rows:
            assert row.seeds == [0, 1]
            assert 0.0 <= row.train_f1 <= 1.0
            assert 0.0 <= row.eval_f1 <= 1.0

        frame = ablation_frame(rows)
        assert list(frame.columns) == ABLATION_COLUMNS
        assert list(frame["stage1_loss"]) == ["wbce", "wa"]
        assert list(frame["seeds"]) == ["0 1", "0 1"]

    def test_needs_a_seed(self, tiny_corpus, tiny_config):
        with pytest.raises(ConfigurationError):
            run_ablation(tiny_corpus, tiny_config, seeds=[])

    def test_negative_seed(self, tiny_corpus, tiny_config):
        with pytest.raises(ConfigurationError):
            run_ablation(tiny_corpus, tiny_config, settings=["backbone"], seeds=[-1])


@pytest.mark.slow
class TestComponentOrdering:
    def test_full_system_beats_afg_beats_backbone(self, tiny_config):
        corpus = generate_synthetic(512, 6, default_correlation_spec(6), seed=0, spatial=16)
        config = tiny_config.model_copy(
            update=dict(
                n_aus=6,
                channels=16,
                spatial=16,
                k_neighbors=3,
                stage1_epochs=20,
                stage2_epochs=20,
                batch_size=32,
            )
        )
        rows = run_ablation(corpus, config, settings=["backbone", "afg", "afg+fgg+mefl+le"], seeds=[0, 1, 2])
        held_out = {row.setting: row.eval_f1 for row in rows}
        assert held_out["afg+fgg+mefl+le"] >= held_out["afg"] >= held_out["backbone"]


class TestComponentGradients:
    def test_all_components_pass(self):
        results = run_gradcheck(seed=0)
        assert [r.name for r in results] == list(COMPONENTS)
        assert all(r.passed for r in results)

    def test_results_do_not_depend_on_the_subset(self):
        alone = run_gradcheck(seed=0, components=["gated_gcn"])[0]
        together = [r for r in run_gradcheck(seed=0) if r.name == "gated_gcn"][0]
        assert alone.max_relative_error == together.max_relative_error

    def test_corrupted_component_fails(self):
        results = run_gradcheck(seed=0, components=["anfl", "mefl"], corrupt="anfl")
        assert [r.passed for r in results] == [False, True]

    def test_unknown_component(self):
        with pytest.raises(ConfigurationError):
            run_gradcheck(components=["fgg"])
