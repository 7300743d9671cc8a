"""speech-mender CLI - recognize, align, plan and splice speech corrections."""

from collections.abc import Iterator
from contextlib import contextmanager
from decimal import Decimal
from pathlib import Path
from statistics import fmean
from typing import Optional

import typer

from . import __version__
from .artifacts import atomic_copy, atomic_write_text, read_text_file
from .audio import read_wav, write_wav
from .config_schema import AnalysisConfig, EvalEntry, EvalReport, PerturbConfig, PipelineConfig
from .config_yaml import load_pipeline_yaml, write_pipeline_yaml
from .constants import (
    CORPUS_MANIFEST,
    DONOR_MANIFEST,
    EXIT_PROCESSING_FAILURE,
    ORACLE_SUFFIX,
    PERTURBED_MANIFEST,
    PLAN_SUFFIX,
    RECORD_SUFFIX,
    REPORT_SUFFIX,
    SIL_LABEL,
    TRANSCRIPT_SUFFIX,
    WAV_SUFFIX,
)
from .errors import InputError, MenderError, MissingFile
from .lexicon import (
    MissingPronunciation,
    Phone,
    PronunciationDict,
    WordToken,
    load_dictionary_file,
    normalize_text,
)
from .metrics import gap_stats, mcd, per
from .output import (
    console,
    print_ablation,
    print_error_payload,
    print_eval_report,
    print_file_written,
    print_info,
    print_pipeline_report,
    print_plan,
    print_success,
    print_warning,
    set_quiet,
)
from .perturb import perturb_corpus, read_corpus_manifest, read_perturbed_manifest
from .pipeline import correct, load_s2t, run_ablation
from .planner import make_plan, read_plan, write_plan
from .splice import (
    apply_plan,
    build_donor_library,
    load_donor_library,
    rebase_donor_manifest,
    write_donor_manifest,
)
from .synthetic import generate_corpus
from .timeline import phone_sequence, read_transcript, write_transcript

app = typer.Typer(
    name="speech-mender",
    help="Correct speech recordings against target text by alignment and splicing.",
    add_completion=False,
)

EVAL_KINDS = ("per", "gaps", "mcd")
SKIPPED_JSON = (RECORD_SUFFIX, PLAN_SUFFIX, REPORT_SUFFIX)


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        console.print(f"speech-mender {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Suppress progress output."),
) -> None:
    """speech-mender - automatic speech correction pipeline."""
    set_quiet(quiet)


@contextmanager
def handle_errors() -> Iterator[None]:
    """Turn errors into a JSON line on stderr and the matching exit code."""
    try:
        yield
    except typer.Exit:
        raise
    except MenderError as e:
        print_error_payload(e.to_payload())
        raise typer.Exit(e.exit_code)
    except Exception as e:
        print_error_payload({"error": "InternalError", "message": str(e)})
        raise typer.Exit(EXIT_PROCESSING_FAILURE)


def _load_config(config_path: Optional[Path]) -> PipelineConfig:
    return load_pipeline_yaml(config_path) if config_path else PipelineConfig()


def _target_words(text: Optional[str], text_file: Optional[Path]) -> list[WordToken]:
    if text is None and text_file is None:
        raise InputError("Target text is required: --text or --text-file")
    return normalize_text(text if text is not None else read_text_file(text_file))


def _dictionary(path: Optional[Path]) -> Optional[PronunciationDict]:
    return load_dictionary_file(path) if path else None


def _analysis(
    window: Optional[float],
    hop: Optional[float],
    mel_bands: Optional[int],
    cepstral_coeffs: Optional[int],
) -> AnalysisConfig:
    values = {
        "window": window,
        "hop": hop,
        "mel_bands": mel_bands,
        "cepstral_coeffs": cepstral_coeffs,
    }
    return AnalysisConfig(**{k: v for k, v in values.items() if v is not None})


@app.command()
def decode(
    logits: Path = typer.Option(..., "--logits", help="CTCLOGITS v1 file."),
    vocab: Path = typer.Option(..., "--vocab", help="Phone vocabulary, one label per line."),
    out: Path = typer.Option(..., "--out", "-o", help="Output transcript JSON."),
    utterance_id: Optional[str] = typer.Option(
        None, "--utterance-id", help="Utterance id (default: logits file stem)."
    ),
) -> None:
    """Greedy-decode CTC logits into a timed phone transcript."""
    with handle_errors():
        transcript = load_s2t(logits_path=logits, vocab_path=vocab, utterance_id=utterance_id)
        write_transcript(transcript, out)
        print_info(f"Decoded {len(transcript.phones or ())} phone(s)")
        print_file_written(out)


@app.command()
def plan(
    transcript: Path = typer.Option(..., "--transcript", help="Recognized transcript JSON."),
    text: Optional[str] = typer.Option(None, "--text", help="Target text."),
    text_file: Optional[Path] = typer.Option(None, "--text-file", help="Target text file."),
    dictionary: Optional[Path] = typer.Option(
        None, "--dictionary", "-d", help="ARPAbet pronunciation dictionary."
    ),
    method: str = typer.Option(
        "word-phone", "--method", "-m", help="word-word, word-phone or phone-phone."
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Utterance duration in seconds (default: transcript end)."
    ),
    out: Path = typer.Option(..., "--out", "-o", help="Output plan JSON."),
    skip_oov: bool = typer.Option(
        False, "--skip-oov", help="Skip the utterance when a target word has no pronunciation."
    ),
) -> None:
    """Align a transcript with target text and write the edit plan."""
    with handle_errors():
        hyp = read_transcript(transcript)
        try:
            edit_plan = make_plan(
                method,
                hyp,
                _target_words(text, text_file),
                _dictionary(dictionary),
                Decimal(str(duration)) if duration is not None else None,
            )
        except MissingPronunciation as e:
            if not skip_oov:
                raise
            print_warning(f"{e.message}, skipping {hyp.utterance_id}")
            return
        write_plan(edit_plan, out)
        print_plan(edit_plan)
        print_file_written(out)


@app.command()
def edit(
    audio: Path = typer.Option(..., "--audio", help="Original WAV (PCM16 mono)."),
    plan_path: Path = typer.Option(..., "--plan", help="Edit plan JSON."),
    donors: Path = typer.Option(..., "--donors", help="Donor manifest JSON."),
    out: Path = typer.Option(..., "--out", "-o", help="Output WAV."),
    crossfade: Optional[float] = typer.Option(
        None, "--crossfade", help="Junction crossfade in seconds (default 0.010)."
    ),
    seed: int = typer.Option(0, "--seed", help="Donor selection seed."),
) -> None:
    """Execute an edit plan on a recording using donor segments."""
    with handle_errors():
        config = PipelineConfig()
        if crossfade is not None:
            config.with_crossfade(Decimal(str(crossfade)))
        edited = apply_plan(
            read_wav(audio), read_plan(plan_path), load_donor_library(donors), config.splice, seed
        )
        write_wav(edited, out)
        print_file_written(out)


@app.command()
def perturb(
    manifest: Path = typer.Option(..., "--manifest", help="Corpus manifest JSON."),
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Perturbed corpus directory."),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="Pipeline YAML."),
    p_insert: Optional[float] = typer.Option(None, "--p-insert", help="Insert probability."),
    p_replace: Optional[float] = typer.Option(None, "--p-replace", help="Replace probability."),
    p_delete: Optional[float] = typer.Option(None, "--p-delete", help="Delete probability."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Perturbation seed."),
    crossfade: Optional[float] = typer.Option(None, "--crossfade", help="Crossfade seconds."),
) -> None:
    """Build a perturbed corpus with oracle transcripts and records."""
    with handle_errors():
        config = _load_config(config_path)
        if crossfade is not None:
            config.with_crossfade(Decimal(str(crossfade)))
        overrides = {
            "p_insert": p_insert,
            "p_replace": p_replace,
            "p_delete": p_delete,
            "seed": seed,
        }
        perturb_config = PerturbConfig(
            **{
                **config.perturb.model_dump(),
                **{k: v for k, v in overrides.items() if v is not None},
            }
        )
        result = perturb_corpus(manifest, perturb_config, out_dir, config.splice)
        touched = sum(1 for entry in result.entries if entry.perturbed)
        print_success(f"Perturbed {touched} of {len(result.entries)} utterance(s)")
        print_file_written(out_dir)


def _utterance_key(path: Path) -> str:
    name = path.name
    for suffix in (ORACLE_SUFFIX, TRANSCRIPT_SUFFIX, WAV_SUFFIX):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _collect(path: Path, pattern: str) -> dict[str, Path]:
    if not path.exists():
        raise MissingFile(str(path))
    if path.is_file():
        return {_utterance_key(path): path}
    found = {}
    for candidate in sorted(path.glob(pattern)):
        if candidate.name.endswith(SKIPPED_JSON) or candidate.name in (
            CORPUS_MANIFEST,
            DONOR_MANIFEST,
            PERTURBED_MANIFEST,
        ):
            continue
        found[_utterance_key(candidate)] = candidate
    return found


def _pairs(hyp: Path, ref: Path, pattern: str) -> list[tuple[str, Path, Path]]:
    """Pair files by utterance key; a single file pair keeps the hyp key."""
    hyps, refs = _collect(hyp, pattern), _collect(ref, pattern)
    if hyp.is_file() and ref.is_file():
        (key, hyp_path), ref_path = next(iter(hyps.items())), next(iter(refs.values()))
        return [(key, hyp_path, ref_path)]
    pairs = []
    for key, hyp_path in hyps.items():
        if key not in refs:
            raise MissingFile(str(ref / f"{key}{pattern.lstrip('*')}"))
        pairs.append((key, hyp_path, refs[key]))
    return pairs


def _phones(path: Path) -> list[Phone]:
    units = phone_sequence(read_transcript(path))
    return [Phone.parse(u.label) for u in units if u.label != SIL_LABEL]


@app.command("eval")
def evaluate(
    kind: str = typer.Argument(..., help="per, gaps or mcd."),
    hyp: Path = typer.Option(..., "--hyp", help="Hypothesis file or directory."),
    ref: Path = typer.Option(..., "--ref", help="Reference file or directory."),
    out: Path = typer.Option(..., "--out", "-o", help="Output report JSON."),
    tolerance_ms: float = typer.Option(100.0, "--tolerance-ms", help="Gap tolerance (ms)."),
    window: Optional[float] = typer.Option(None, "--window", help="Analysis window (s)."),
    hop: Optional[float] = typer.Option(None, "--hop", help="Analysis hop (s)."),
    mel_bands: Optional[int] = typer.Option(None, "--mel-bands", help="Mel filter count."),
    cepstral_coeffs: Optional[int] = typer.Option(
        None, "--cepstral-coeffs", help="Cepstral coefficients (c0 excluded)."
    ),
) -> None:
    """Score transcripts (per, gaps) or recordings (mcd) against references."""
    with handle_errors():
        if kind not in EVAL_KINDS:
            raise InputError(f"Unknown evaluation kind: {kind}", kind=kind)

        entries = []
        if kind == "mcd":
            analysis = _analysis(window, hop, mel_bands, cepstral_coeffs)
            for key, hyp_path, ref_path in _pairs(hyp, ref, f"*{WAV_SUFFIX}"):
                value = mcd(read_wav(hyp_path), read_wav(ref_path), analysis)
                entries.append(EvalEntry(utterance_id=key, values={"mcd": value}))
        else:
            for key, hyp_path, ref_path in _pairs(hyp, ref, "*.json"):
                if kind == "per":
                    hyp_phones, ref_phones = _phones(hyp_path), _phones(ref_path)
                    values = {
                        "per": per(ref_phones, hyp_phones, stressed=False).rate,
                        "s_per": per(ref_phones, hyp_phones, stressed=True).rate,
                    }
                else:
                    stats = gap_stats(
                        phone_sequence(read_transcript(hyp_path)),
                        phone_sequence(read_transcript(ref_path)),
                        tolerance_ms,
                    )
                    values = {
                        "avg_start_gap_ms": stats.avg_start_gap_ms,
                        "avg_end_gap_ms": stats.avg_end_gap_ms,
                        "tolerable_start_ratio": stats.tolerable_start_ratio,
                        "tolerable_end_ratio": stats.tolerable_end_ratio,
                    }
                entries.append(EvalEntry(utterance_id=key, values=values))

        aggregate = {}
        if entries:
            for name in entries[0].values:
                aggregate[name] = fmean(entry.values[name] for entry in entries)
        report = EvalReport(kind=kind, entries=entries, aggregate=aggregate)
        atomic_write_text(out, report.model_dump_json(indent=2) + "\n")
        print_eval_report(report)
        print_file_written(out)


@app.command()
def pipeline(
    audio: Path = typer.Option(..., "--audio", help="Recording to correct (PCM16 mono)."),
    transcript: Optional[Path] = typer.Option(
        None, "--transcript", help="S2T transcript JSON (forced or oracle)."
    ),
    logits: Optional[Path] = typer.Option(None, "--logits", help="CTC logits file."),
    vocab: Optional[Path] = typer.Option(None, "--vocab", help="CTC vocabulary file."),
    text: Optional[str] = typer.Option(None, "--text", help="Target text."),
    text_file: Optional[Path] = typer.Option(None, "--text-file", help="Target text file."),
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Output directory."),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="Pipeline YAML."),
    method: Optional[str] = typer.Option(None, "--method", "-m", help="Correction method."),
    dictionary: Optional[Path] = typer.Option(None, "--dictionary", "-d", help="Dictionary."),
    donors: Optional[Path] = typer.Option(None, "--donors", help="Donor manifest JSON."),
    reference: Optional[Path] = typer.Option(
        None, "--reference", help="Reference WAV for MCD reporting."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Donor selection seed."),
    crossfade: Optional[float] = typer.Option(None, "--crossfade", help="Crossfade seconds."),
    skip_oov: bool = typer.Option(
        False, "--skip-oov", help="Copy the input when a target word has no pronunciation."
    ),
) -> None:
    """Correct one recording end to end: S2T -> plan -> splice -> report."""
    with handle_errors():
        config = _load_config(config_path).with_overrides(
            method=method, dictionary=dictionary, donors=donors, seed=seed
        )
        if crossfade is not None:
            config.with_crossfade(Decimal(str(crossfade)))

        if not audio.is_file():
            raise MissingFile(str(audio))
        hyp = load_s2t(transcript, logits, vocab, utterance_id=audio.stem)
        config.with_source(hyp.source)
        if config.donors is None:
            raise InputError("A donor manifest is required: --donors or config 'donors'")

        utterance_id = hyp.utterance_id or audio.stem
        wav_path = out_dir / f"{utterance_id}{WAV_SUFFIX}"
        original = read_wav(audio)
        try:
            result = correct(
                original,
                hyp,
                _target_words(text, text_file),
                config,
                _dictionary(config.dictionary),
                load_donor_library(config.donors),
                read_wav(reference) if reference else None,
            )
        except MissingPronunciation as e:
            if not skip_oov:
                raise
            print_warning(f"{e.message}, copying {utterance_id} unchanged")
            print_file_written(atomic_copy(audio, wav_path))
            return

        if result.plan.regions:
            write_wav(result.waveform, wav_path)
        else:
            print_warning("Nothing to correct, copying the input unchanged")
            atomic_copy(audio, wav_path)
        plan_path = write_plan(result.plan, out_dir / f"{utterance_id}{PLAN_SUFFIX}")
        report_path = out_dir / f"{utterance_id}{REPORT_SUFFIX}"
        atomic_write_text(report_path, result.report.model_dump_json(indent=2) + "\n")

        print_plan(result.plan)
        print_pipeline_report(result.report)
        for path in (wav_path, plan_path, report_path):
            print_file_written(path)


@app.command("make-corpus")
def make_corpus(
    dictionary: Path = typer.Option(..., "--dictionary", "-d", help="ARPAbet dictionary."),
    out_dir: Path = typer.Option(..., "--out-dir", "-o", help="Corpus directory."),
    utterances: int = typer.Option(50, "--utterances", "-n", help="Number of utterances."),
    duration: float = typer.Option(3.0, "--duration", help="Utterance length in seconds."),
    sample_rate: int = typer.Option(16000, "--sample-rate", help="Sample rate in Hz."),
    seed: int = typer.Option(0, "--seed", help="Generator seed."),
) -> None:
    """Generate a synthetic single-speaker corpus with word annotations."""
    with handle_errors():
        manifest = generate_corpus(
            out_dir,
            load_dictionary_file(dictionary),
            utterances,
            duration=duration,
            sample_rate=sample_rate,
            seed=seed,
        )
        words = sum(len(entry.text.split()) for entry in manifest.entries)
        print_success(f"Generated {len(manifest.entries)} utterance(s), {words} word(s)")
        print_file_written(out_dir / CORPUS_MANIFEST)


@app.command("build-donors")
def build_donors(
    manifest: Path = typer.Option(..., "--manifest", help="Corpus manifest JSON."),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o", help="Donor manifest path (default: next to the corpus manifest)."
    ),
) -> None:
    """Cut every word and phone of a corpus into a donor manifest."""
    with handle_errors():
        corpus = read_corpus_manifest(manifest)
        library, donor_manifest = build_donor_library(corpus, manifest.parent)
        out = out or manifest.parent / DONOR_MANIFEST
        if out.parent.resolve() != manifest.parent.resolve():
            donor_manifest = rebase_donor_manifest(donor_manifest, manifest.parent)
        write_donor_manifest(donor_manifest, out)
        print_success(f"{len(library.tokens())} donor token(s)")
        print_file_written(out)


@app.command()
def ablation(
    manifest: Path = typer.Option(..., "--manifest", help="Perturbed corpus manifest JSON."),
    dictionary: Path = typer.Option(..., "--dictionary", "-d", help="ARPAbet dictionary."),
    donors: Optional[Path] = typer.Option(
        None, "--donors", help="Donor manifest (default: built from the source corpus)."
    ),
    config_path: Optional[Path] = typer.Option(None, "--config", "-c", help="Pipeline YAML."),
    out: Path = typer.Option(..., "--out", "-o", help="Output report JSON."),
) -> None:
    """Compare correction methods and S2T sources by MCD to the originals."""
    with handle_errors():
        config = _load_config(config_path)
        perturbed = read_perturbed_manifest(manifest)
        if donors is not None:
            library = load_donor_library(donors)
        else:
            source = Path(perturbed.source_manifest)
            library, _ = build_donor_library(read_corpus_manifest(source), source.parent)

        report = run_ablation(
            perturbed, manifest.parent, load_dictionary_file(dictionary), library, config
        )
        atomic_write_text(out, report.model_dump_json(indent=2) + "\n")
        print_ablation(report)
        print_file_written(out)


@app.command("init-config")
def init_config(
    path: Path = typer.Argument(Path("pipeline.yaml"), help="File or directory to write."),
) -> None:
    """Write the default pipeline configuration."""
    with handle_errors():
        written = write_pipeline_yaml(PipelineConfig(), path)
        print_file_written(written)
