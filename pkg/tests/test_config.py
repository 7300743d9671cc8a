"""Tests for config_schema and config_yaml modules."""

from decimal import Decimal
from pathlib import Path

import pytest

from speech_mender.config_schema import (
    AnalysisConfig,
    PerturbConfig,
    PipelineConfig,
    SpliceConfig,
)
from speech_mender.config_yaml import load_pipeline_yaml, render_yaml, write_pipeline_yaml
from speech_mender.errors import InvariantViolation, MissingFile, SchemaError
from speech_mender.planner import NotApplicable


class TestAnalysisConfig:
    """Tests for AnalysisConfig."""

    def test_defaults(self) -> None:
        """Should default to 25 ms windows, 10 ms hops, 80 bands and 13 coefficients."""
        config = AnalysisConfig()
        assert config.window_samples(16000) == 400
        assert config.hop_samples(16000) == 160
        assert config.fft_size(16000) == 512
        assert (config.mel_bands, config.cepstral_coeffs) == (80, 13)

    def test_hop_above_window(self) -> None:
        """Should reject a hop longer than the window."""
        with pytest.raises(InvariantViolation):
            AnalysisConfig(window=0.01, hop=0.02)

    def test_too_many_coefficients(self) -> None:
        """Should keep the coefficient count below the band count."""
        with pytest.raises(InvariantViolation):
            AnalysisConfig(mel_bands=13, cepstral_coeffs=13)


class TestSpliceConfig:
    """Tests for SpliceConfig."""

    def test_crossfade_samples(self) -> None:
        """Should convert the default 10 ms crossfade to samples."""
        assert SpliceConfig().crossfade_samples(16000) == 160
        assert SpliceConfig(crossfade=0).crossfade_samples(16000) == 0

    def test_negative_crossfade(self) -> None:
        """Should reject negative crossfades."""
        with pytest.raises(InvariantViolation):
            SpliceConfig(crossfade=-0.01)


class TestPipelineConfig:
    """Tests for PipelineConfig."""

    def test_defaults(self) -> None:
        """Should use word-phone on forced transcripts."""
        config = PipelineConfig()
        assert config.method == "word-phone"
        assert config.source == "forced"
        assert config.frame_rate == Decimal("0.04")
        assert config.perturb == PerturbConfig()

    def test_word_word_on_ctc(self) -> None:
        """Should refuse word-word on ctc sources."""
        with pytest.raises(NotApplicable):
            PipelineConfig(method="word-word", source="ctc")

    def test_with_source_revalidates(self) -> None:
        """Should check the method/source pair on assignment."""
        config = PipelineConfig(method="word-word")
        with pytest.raises(NotApplicable):
            config.with_source("ctc")

    def test_with_method(self) -> None:
        """Should switch methods and refuse word-word on a ctc source."""
        config = PipelineConfig(source="ctc").with_method("phone-phone")
        assert config.method == "phone-phone"
        with pytest.raises(NotApplicable):
            config.with_method("word-word")

    def test_with_overrides_keeps_unset(self) -> None:
        """Should leave values alone when the override is None."""
        config = PipelineConfig(method="phone-phone", seed=3)
        config.with_overrides(method=None, seed=9, dictionary=Path("x.dict"))
        assert config.method == "phone-phone"
        assert config.seed == 9
        assert config.dictionary == Path("x.dict")

    def test_unknown_method(self) -> None:
        """Should reject method names outside the enumeration."""
        with pytest.raises(ValueError):
            PipelineConfig(method="char-char")


class TestPipelineYaml:
    """Tests for render_yaml and load_pipeline_yaml."""

    def test_render(self) -> None:
        """Should render keys in a stable order."""
        yaml_str = render_yaml(PipelineConfig())
        assert yaml_str.index("method: word-phone") < yaml_str.index("analysis:")
        assert "  crossfade: 0.01" in yaml_str
        assert render_yaml(PipelineConfig()) == yaml_str

    def test_round_trip(self, tmp_path: Path) -> None:
        """Should load back the configuration it wrote."""
        config = PipelineConfig(method="phone-phone", seed=5)
        config.with_crossfade(Decimal("0.02"))
        path = write_pipeline_yaml(config, tmp_path)
        assert path == tmp_path / "pipeline.yaml"
        assert load_pipeline_yaml(path) == config

    def test_relative_paths(self, tmp_path: Path) -> None:
        """Should resolve dictionary and donors against the file's directory."""
        path = tmp_path / "conf" / "p.yaml"
        path.parent.mkdir()
        path.write_text("dictionary: dicts/cmu.dict\ndonors: /abs/donors.json\n")
        config = load_pipeline_yaml(path)
        assert config.dictionary == tmp_path / "conf" / "dicts" / "cmu.dict"
        assert config.donors == Path("/abs/donors.json")

    def test_empty_file(self, tmp_path: Path) -> None:
        """Should treat an empty file as all defaults."""
        path = tmp_path / "p.yaml"
        path.write_text("")
        assert load_pipeline_yaml(path) == PipelineConfig()

    def test_unknown_key(self, tmp_path: Path) -> None:
        """Should name the offending key."""
        path = tmp_path / "p.yaml"
        path.write_text("splice:\n  crossfade: 0.01\n  curve: linear\n")
        with pytest.raises(SchemaError) as excinfo:
            load_pipeline_yaml(path)
        assert excinfo.value.details["path"] == "splice.curve"

    def test_invalid_yaml(self, tmp_path: Path) -> None:
        """Should raise SchemaError on unparsable YAML."""
        path = tmp_path / "p.yaml"
        path.write_text("method: [unclosed\n")
        with pytest.raises(SchemaError):
            load_pipeline_yaml(path)

    def test_not_a_mapping(self, tmp_path: Path) -> None:
        """Should raise SchemaError for a top-level list."""
        path = tmp_path / "p.yaml"
        path.write_text("- word-word\n")
        with pytest.raises(SchemaError):
            load_pipeline_yaml(path)

    def test_missing(self, tmp_path: Path) -> None:
        """Should raise MissingFile."""
        with pytest.raises(MissingFile):
            load_pipeline_yaml(tmp_path / "absent.yaml")
