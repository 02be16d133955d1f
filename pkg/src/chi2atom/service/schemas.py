"""Request/response models of the HTTP interface.

The experiment parameter models live in ``chi2atom.config``; these wrap
them with transport-level concerns (output format, artifact payloads, the
run manifest). Everything rejects unknown keys.
"""

from __future__ import annotations

from typing import Literal

from pydantic import Field

from ..config import ExperimentConfig, StrictModel

MANIFEST_SCHEMA_VERSION = 1


class RunRequest(ExperimentConfig):
    """An experiment to execute plus the artifact format."""

    format: Literal["csv", "json"] = "csv"


class Artifact(StrictModel):
    name: str
    content: str


class FileRecord(StrictModel):
    name: str
    sha256: str
    bytes: int


class RunManifest(StrictModel):
    """Echo of the resolved config plus provenance for the emitted files."""

    schema_version: int = MANIFEST_SCHEMA_VERSION
    tool_version: str
    experiment: str
    config: dict
    format: str
    wall_seconds: float
    files: list[FileRecord] = Field(default_factory=list)
    summary: dict = Field(default_factory=dict)


class RunResponse(StrictModel):
    manifest: RunManifest
    artifacts: list[Artifact]


class HealthResponse(StrictModel):
    status: str
    version: str


class PresetList(StrictModel):
    presets: list[str]
