"""Pipeline configuration YAML with stable ordering."""

from io import StringIO
from pathlib import Path
from typing import Any

from pydantic import ValidationError
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from .artifacts import atomic_write_text, read_text_file
from .config_schema import PipelineConfig
from .constants import PIPELINE_YAML
from .errors import SchemaError
from .timeline import schema_error_from


def _ordered_dict_from_config(config: PipelineConfig) -> dict[str, Any]:
    """Convert PipelineConfig to an ordered dict for YAML output."""
    result: dict[str, Any] = {
        "method": config.method,
        "source": config.source,
        "dictionary": str(config.dictionary) if config.dictionary else None,
        "donors": str(config.donors) if config.donors else None,
        "frame_rate": float(config.frame_rate),
        "tolerance_ms": config.tolerance_ms,
        "seed": config.seed,
    }

    result["analysis"] = {
        "window": config.analysis.window,
        "hop": config.analysis.hop,
        "mel_bands": config.analysis.mel_bands,
        "cepstral_coeffs": config.analysis.cepstral_coeffs,
        "log_floor": config.analysis.log_floor,
    }

    result["splice"] = {
        "crossfade": float(config.splice.crossfade),
        "shape": config.splice.shape,
    }

    result["perturb"] = {
        "p_insert": config.perturb.p_insert,
        "p_replace": config.perturb.p_replace,
        "p_delete": config.perturb.p_delete,
        "seed": config.perturb.seed,
    }

    return result


def render_yaml(config: PipelineConfig) -> str:
    """Render PipelineConfig to a YAML string.

    Uses ruamel.yaml for stable output with:
    - 2-space indentation
    - Preserved key ordering
    """
    yaml = YAML()
    yaml.default_flow_style = False
    yaml.indent(mapping=2, sequence=4, offset=2)

    stream = StringIO()
    yaml.dump(_ordered_dict_from_config(config), stream)
    return stream.getvalue()


def write_pipeline_yaml(config: PipelineConfig, path: Path) -> Path:
    """Write the configuration; a directory path gets the default file name."""
    output_path = path / PIPELINE_YAML if path.is_dir() else path
    atomic_write_text(output_path, render_yaml(config))
    return output_path


def load_pipeline_yaml(path: Path) -> PipelineConfig:
    """Load and validate a pipeline configuration file.

    Relative dictionary and donor paths resolve against the file's directory.

    Raises:
        MissingFile: If the file does not exist.
        SchemaError: On invalid YAML or unknown/mistyped keys.
    """
    yaml = YAML(typ="safe")
    try:
        data = yaml.load(read_text_file(path))
    except YAMLError as e:
        raise SchemaError("$", f"{path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaError("$", f"{path}: expected a mapping")

    for key in ("dictionary", "donors"):
        if data.get(key):
            data[key] = path.parent / data[key]

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise schema_error_from(e) from e
