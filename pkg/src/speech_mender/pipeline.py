"""End-to-end correction: S2T transcript -> edit plan -> spliced audio."""

from collections.abc import Sequence
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from statistics import fmean
from typing import Optional

from .artifacts import read_text_file
from .audio import Waveform, read_wav
from .config_schema import (
    AblationCell,
    AblationReport,
    PerturbedManifest,
    PipelineConfig,
    PipelineReport,
)
from .constants import (
    CORRECTION_METHODS,
    METHOD_WORD_WORD,
    SOURCE_CTC,
    SOURCE_ORACLE,
)
from .ctcdecode import (
    frame_spans_from_units,
    frames_for_duration,
    greedy_decode,
    load_vocab,
    parse_logits,
    synthesize_logits,
    to_transcript,
)
from .errors import InputError, MissingFile
from .lexicon import PronunciationDict, WordToken, normalize_text
from .metrics import mcd
from .planner import EditPlan, make_plan
from .splice import DonorLibrary, apply_plan
from .timeline import Transcript, phone_sequence, read_transcript, transcript_end


@dataclass(frozen=True)
class CorrectionResult:
    waveform: Waveform
    plan: EditPlan
    report: PipelineReport


def load_s2t(
    transcript_path: Optional[Path] = None,
    logits_path: Optional[Path] = None,
    vocab_path: Optional[Path] = None,
    utterance_id: Optional[str] = None,
) -> Transcript:
    """Load the S2T result: a transcript file, or CTC logits decoded greedily."""
    if transcript_path is not None:
        return read_transcript(transcript_path)
    if logits_path is None:
        raise InputError("An S2T input is required: a transcript or a logits file")
    if vocab_path is None:
        raise InputError("Decoding logits needs a vocabulary file")
    if not logits_path.is_file():
        raise MissingFile(str(logits_path))

    vocab = load_vocab(read_text_file(vocab_path).splitlines())
    with logits_path.open("rb") as stream:
        matrix = parse_logits(stream, vocab)
    return to_transcript(
        utterance_id or logits_path.stem, greedy_decode(matrix), matrix.frame_rate
    )


def simulate_ctc(transcript: Transcript, frame_rate: Decimal) -> Transcript:
    """Re-express a transcript's phones as a greedy CTC decode on a frame grid."""
    spans = frame_spans_from_units(phone_sequence(transcript), frame_rate)
    vocab = sorted({span.label for span in spans})
    frames = frames_for_duration(transcript_end(transcript), frame_rate)
    if spans:
        frames = max(frames, spans[-1].last_frame + 1)
    matrix = synthesize_logits(spans, vocab, frames, frame_rate)
    return to_transcript(transcript.utterance_id, greedy_decode(matrix), frame_rate)


def correct(
    audio: Waveform,
    hyp: Transcript,
    target_words: Sequence[WordToken],
    config: PipelineConfig,
    pron_dict: Optional[PronunciationDict],
    donors: DonorLibrary,
    reference: Optional[Waveform] = None,
) -> CorrectionResult:
    """Plan edits against the target text and splice them into the audio.

    With a reference waveform the report carries the MCD of both the input
    and the corrected audio against it.
    """
    plan = make_plan(config.method, hyp, target_words, pron_dict, duration=audio.duration)
    edited = apply_plan(audio, plan, donors, config.splice, seed=config.seed)

    report = PipelineReport(
        utterance_id=hyp.utterance_id,
        method=config.method,
        source=hyp.source,
        regions=len(plan.regions),
        input_duration=float(audio.duration),
        output_duration=float(edited.duration),
    )
    if reference is not None:
        report.mcd_input = mcd(audio, reference, config.analysis)
        report.mcd_corrected = mcd(edited, reference, config.analysis)
    return CorrectionResult(edited, plan, report)


def run_ablation(
    manifest: PerturbedManifest,
    manifest_dir: Path,
    pron_dict: PronunciationDict,
    donors: DonorLibrary,
    config: PipelineConfig,
) -> AblationReport:
    """Mean MCD to the originals for every correction method and S2T source.

    Only perturbed utterances take part. The CTC source is simulated from the
    oracle transcript on ``config.frame_rate``; word-word has no CTC cell.
    """
    entries = [e for e in manifest.entries if e.perturbed]
    loaded = []
    for entry in entries:
        oracle = read_transcript(manifest_dir / entry.oracle_transcript)
        loaded.append(
            (
                entry,
                read_wav(manifest_dir / entry.perturbed_wav),
                read_wav(Path(entry.original_wav)),
                {
                    SOURCE_ORACLE: oracle,
                    SOURCE_CTC: simulate_ctc(oracle, config.frame_rate),
                },
            )
        )

    report = AblationReport()
    if loaded:
        report.baseline_mcd = fmean(
            mcd(perturbed, original, config.analysis) for _, perturbed, original, _ in loaded
        )

    for method in CORRECTION_METHODS:
        for source in (SOURCE_ORACLE, SOURCE_CTC):
            if method == METHOD_WORD_WORD and source == SOURCE_CTC:
                report.cells.append(AblationCell(method=method, source=source, applicable=False))
                continue
            cell_config = config.model_copy(update={"method": method, "source": source})
            scores = []
            for entry, perturbed, original, hyps in loaded:
                result = correct(
                    perturbed,
                    hyps[source],
                    normalize_text(entry.original_text),
                    cell_config,
                    pron_dict,
                    donors,
                )
                scores.append(mcd(result.waveform, original, config.analysis))
            report.cells.append(
                AblationCell(
                    method=method,
                    source=source,
                    applicable=True,
                    utterances=len(scores),
                    mcd=fmean(scores) if scores else None,
                )
            )
    return report
