import pytest

from scanplan.config import PipelineConfig, load_config
from scanplan.errors import ConfigError


class TestDefaults:
    def test_tuned_values(self):
        config = PipelineConfig()
        assert config.bucket_size == 0.0508          # 2 in
        assert config.schedule == (50.0, 40.0, 30.0, 20.0, 10.0, 5.0, 3.0)
        assert config.block_height == 2.4384         # 8 ft
        assert config.block_width == 0.2032          # 8 in
        assert config.block_length == 0.4572         # 1.5 ft
        assert config.opacity == 0.5
        assert config.slice_count == 100
        assert config.seed == 42


class TestConfigFile:
    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment line\n"
            "opacity = 0.7\n"
            "slice_count = 50   # inline comment\n"
            "schedule = 40,20,5\n"
            "direction_mode = kmeans\n"
        )
        config = load_config(path, {"seed": "7"})
        assert config.opacity == 0.7
        assert config.slice_count == 50
        assert config.schedule == (40.0, 20.0, 5.0)
        assert config.direction_mode == "kmeans"
        assert config.seed == 7

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("not_a_key = 3\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config(path)

    def test_bad_number_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("opacity = often\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_equals_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("opacity 0.5\n")
        with pytest.raises(ConfigError, match="key=value"):
            load_config(path)

    def test_semantic_validation(self):
        with pytest.raises(ConfigError):
            load_config(None, {"opacity": "1.5"})
        with pytest.raises(ConfigError):
            load_config(None, {"wall_k": "5"})
        with pytest.raises(ConfigError):
            load_config(None, {"style": "sketch"})

    def test_summary_is_stable(self):
        a = PipelineConfig().summary()
        b = PipelineConfig().summary()
        assert a == b
        assert "opacity=0.5" in a
