"""Constants used throughout speech-mender."""

from decimal import Decimal

# Exit codes
EXIT_SUCCESS = 0
EXIT_VALIDATION_FAILURE = 2
EXIT_PROCESSING_FAILURE = 3

# Time resolution of every stored time stamp
TIME_QUANTUM = Decimal("0.000001")

# Reserved label for silence/pause units
SIL_LABEL = "sil"

# Transcript sources
SOURCE_FORCED = "forced"
SOURCE_CTC = "ctc"
SOURCE_ORACLE = "oracle"

# Correction methods
METHOD_WORD_WORD = "word-word"
METHOD_WORD_PHONE = "word-phone"
METHOD_PHONE_PHONE = "phone-phone"
CORRECTION_METHODS = (METHOD_WORD_WORD, METHOD_WORD_PHONE, METHOD_PHONE_PHONE)

# CTC decoding
DEFAULT_FRAME_RATE = Decimal("0.040")
LOGITS_MAGIC = "CTCLOGITS"
LOGITS_VERSION = "v1"

# Analysis front end
DEFAULT_WINDOW = 0.025
DEFAULT_HOP = 0.010
DEFAULT_MEL_BANDS = 80
DEFAULT_CEPSTRAL_COEFFS = 13
DEFAULT_LOG_FLOOR = 1e-10

# Splicing
DEFAULT_CROSSFADE = Decimal("0.010")

# Perturbation
DEFAULT_PERTURB_PROBABILITY = 0.05

# Evaluation
DEFAULT_TOLERANCE_MS = 100.0

# PCM16 scaling
PCM16_SCALE = 32768.0

# File names
PIPELINE_YAML = "pipeline.yaml"
CORPUS_MANIFEST = "corpus.json"
PERTURBED_MANIFEST = "manifest.json"
DONOR_MANIFEST = "donors.json"
ORACLE_SUFFIX = ".oracle.json"
RECORD_SUFFIX = ".record.json"
TRANSCRIPT_SUFFIX = ".json"
TEXT_SUFFIX = ".txt"
WAV_SUFFIX = ".wav"
PLAN_SUFFIX = ".plan.json"
REPORT_SUFFIX = ".report.json"
