"""Pydantic schemas for pipeline configuration, manifests and reports."""

from decimal import Decimal
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, RootModel, model_validator

from .constants import (
    DEFAULT_CEPSTRAL_COEFFS,
    DEFAULT_CROSSFADE,
    DEFAULT_FRAME_RATE,
    DEFAULT_HOP,
    DEFAULT_LOG_FLOOR,
    DEFAULT_MEL_BANDS,
    DEFAULT_PERTURB_PROBABILITY,
    DEFAULT_TOLERANCE_MS,
    DEFAULT_WINDOW,
    METHOD_WORD_PHONE,
    METHOD_WORD_WORD,
    SOURCE_CTC,
    SOURCE_FORCED,
)
from .errors import InvariantViolation
from .planner import NotApplicable
from .timeline import Seconds, TimedUnit

Method = Literal["word-word", "word-phone", "phone-phone"]
Source = Literal["forced", "ctc", "oracle"]


class AnalysisConfig(BaseModel):
    """Framing and mel-cepstral analysis settings."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    window: float = DEFAULT_WINDOW
    hop: float = DEFAULT_HOP
    mel_bands: int = DEFAULT_MEL_BANDS
    cepstral_coeffs: int = DEFAULT_CEPSTRAL_COEFFS
    log_floor: float = DEFAULT_LOG_FLOOR

    @model_validator(mode="after")
    def _check_analysis(self) -> "AnalysisConfig":
        if self.window <= 0 or self.hop <= 0:
            raise InvariantViolation("window and hop must be positive")
        if self.hop > self.window:
            raise InvariantViolation(f"hop {self.hop} exceeds window {self.window}")
        if not 0 < self.cepstral_coeffs < self.mel_bands:
            raise InvariantViolation(
                f"need 0 < cepstral_coeffs ({self.cepstral_coeffs}) "
                f"< mel_bands ({self.mel_bands})"
            )
        if self.log_floor <= 0:
            raise InvariantViolation("log_floor must be positive")
        return self

    def window_samples(self, sample_rate: int) -> int:
        return max(1, round(self.window * sample_rate))

    def hop_samples(self, sample_rate: int) -> int:
        return max(1, round(self.hop * sample_rate))

    def fft_size(self, sample_rate: int) -> int:
        """Next power of two at or above the window length."""
        return 1 << (self.window_samples(sample_rate) - 1).bit_length()


class SpliceConfig(BaseModel):
    """Junction crossfade settings."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    crossfade: Seconds = DEFAULT_CROSSFADE
    shape: Literal["raised-cosine"] = "raised-cosine"

    @model_validator(mode="after")
    def _check_crossfade(self) -> "SpliceConfig":
        if self.crossfade < 0:
            raise InvariantViolation(f"crossfade must be >= 0, got {self.crossfade}")
        return self

    def crossfade_samples(self, sample_rate: int) -> int:
        return int((self.crossfade * sample_rate).to_integral_value())


class PerturbConfig(BaseModel):
    """Word-level perturbation probabilities."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    p_insert: float = DEFAULT_PERTURB_PROBABILITY
    p_replace: float = DEFAULT_PERTURB_PROBABILITY
    p_delete: float = DEFAULT_PERTURB_PROBABILITY
    seed: int = 0

    @model_validator(mode="after")
    def _check_probabilities(self) -> "PerturbConfig":
        probabilities = (self.p_insert, self.p_replace, self.p_delete)
        if any(p < 0 for p in probabilities):
            raise InvariantViolation("perturbation probabilities must be non-negative")
        if sum(probabilities) > 1:
            raise InvariantViolation(
                f"perturbation probabilities sum to {sum(probabilities)}, above 1"
            )
        return self


class PipelineConfig(BaseModel):
    """Complete correction pipeline configuration."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    method: Method = METHOD_WORD_PHONE
    source: Source = SOURCE_FORCED
    dictionary: Optional[Path] = None
    donors: Optional[Path] = None
    frame_rate: Seconds = DEFAULT_FRAME_RATE
    tolerance_ms: float = DEFAULT_TOLERANCE_MS
    seed: int = 0
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    splice: SpliceConfig = Field(default_factory=SpliceConfig)
    perturb: PerturbConfig = Field(default_factory=PerturbConfig)

    @model_validator(mode="after")
    def _check_method_source(self) -> "PipelineConfig":
        if self.method == METHOD_WORD_WORD and self.source == SOURCE_CTC:
            raise NotApplicable(self.method, self.source)
        if self.frame_rate <= 0:
            raise InvariantViolation(f"frame_rate must be positive, got {self.frame_rate}")
        return self

    def with_method(self, method: str) -> "PipelineConfig":
        """Set the correction method."""
        self.method = method
        return self

    def with_source(self, source: str) -> "PipelineConfig":
        """Set the S2T source kind."""
        self.source = source
        return self

    def with_crossfade(self, crossfade: Decimal) -> "PipelineConfig":
        """Set the splice crossfade length in seconds."""
        self.splice.crossfade = crossfade
        return self

    def with_overrides(self, **values: object) -> "PipelineConfig":
        """Apply CLI overrides; None means "keep the file value"."""
        updates = {key: value for key, value in values.items() if value is not None}
        if updates:
            merged = self.model_dump()
            merged.update(updates)
            validated = PipelineConfig.model_validate(merged)
            for key in updates:
                object.__setattr__(self, key, getattr(validated, key))
        return self


class CorpusEntry(BaseModel):
    """One utterance of a source corpus. Paths are relative to the manifest."""

    utterance_id: str
    speaker: str
    wav: str
    transcript: str
    text: str


class CorpusManifest(BaseModel):
    """Source corpus listing."""

    sample_rate: int
    dictionary: Optional[str] = None
    entries: list[CorpusEntry] = Field(default_factory=list)


class PerturbedEntry(BaseModel):
    """One utterance of a perturbed corpus with its ground truth."""

    utterance_id: str
    speaker: str
    original_wav: str
    original_text: str
    perturbed_wav: str
    oracle_transcript: str
    record: str
    perturbed: bool


class PerturbedManifest(BaseModel):
    """Perturbed corpus listing."""

    source_manifest: str
    config: PerturbConfig
    entries: list[PerturbedEntry] = Field(default_factory=list)


class DonorSource(BaseModel):
    """Donor segment location: a span of a same-speaker recording."""

    utterance: str
    wav: str
    span: tuple[Seconds, Seconds]
    phones: list[TimedUnit] = Field(default_factory=list)


class DonorManifest(RootModel[dict[str, list[DonorSource]]]):
    """Token -> donor segment locations."""


class EvalEntry(BaseModel):
    """Metric values for one utterance."""

    utterance_id: str
    values: dict[str, float]


class EvalReport(BaseModel):
    """Per-utterance metrics plus their mean over utterances."""

    kind: Literal["per", "gaps", "mcd"]
    entries: list[EvalEntry] = Field(default_factory=list)
    aggregate: dict[str, float] = Field(default_factory=dict)


class PipelineReport(BaseModel):
    """Outcome of one end-to-end correction."""

    utterance_id: str
    method: Method
    source: Source
    regions: int
    input_duration: float
    output_duration: float
    mcd_input: Optional[float] = None
    mcd_corrected: Optional[float] = None


class AblationCell(BaseModel):
    """Mean MCD of one correction method on one S2T source."""

    method: Method
    source: Source
    applicable: bool
    utterances: int = 0
    mcd: Optional[float] = None


class AblationReport(BaseModel):
    """Correction method x S2T source MCD matrix."""

    baseline_mcd: Optional[float] = None
    cells: list[AblationCell] = Field(default_factory=list)
