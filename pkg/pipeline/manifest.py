import dataclasses
import hashlib
import logging
import os
import platform
from datetime import datetime, timezone
from importlib import metadata
from typing import Any, Dict, List, Optional

from util.serialize_utils import canonical_json, write_json

_logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TRACKED_PACKAGES = ("numpy", "pandas", "scipy", "pydantic", "pyyaml", "rich")


def config_payload(configs: List[Any]) -> Dict[str, Dict[str, Any]]:
    return {type(c).__name__: dataclasses.asdict(c) for c in configs}


def config_hash(configs: List[Any]) -> str:
    """
    SHA-256 of the canonical json of every resolved config dataclass
    """
    return hashlib.sha256(canonical_json(config_payload(configs)).encode("utf-8")).hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class ManifestLogger:
    def log_sample(self, stage: str, horizon: Optional[int], nobs: int, n_countries: int):
        pass

    def log_output(self, path: str):
        pass

    def log_value(self, key: str, value: Any):
        pass

    @property
    def outputs(self) -> List[str]:
        return []

    def close(self) -> Optional[str]:
        return None


class NullManifestLogger(ManifestLogger):
    pass


class FileManifestLogger(ManifestLogger):
    """
    collects what a command produced and writes manifest.json into the output directory

    everything but the timestamp is a function of config and inputs, and the sorted-key
    layout puts the timestamp on a line of its own
    """

    def __init__(self, base_path: str, command: str, configs: List[Any], seed: Optional[int] = None):
        self._base_path = base_path
        self._manifest_path = os.path.join(base_path, MANIFEST_NAME)
        self._command = command
        self._configs = configs
        self._seed = seed
        self._samples: List[Dict[str, Any]] = []
        self._outputs: List[str] = []
        self._values: Dict[str, Any] = {}
        os.makedirs(self._base_path, exist_ok=True)

    def log_sample(self, stage: str, horizon: Optional[int], nobs: int, n_countries: int):
        self._samples.append({"stage": stage, "horizon": horizon, "nobs": nobs, "n_countries": n_countries})

    def log_output(self, path: str):
        self._outputs.append(os.path.relpath(path, self._base_path).replace(os.sep, "/"))

    def log_value(self, key: str, value: Any):
        self._values[key] = value

    @property
    def outputs(self) -> List[str]:
        return list(self._outputs)

    def close(self) -> str:
        payload = {
            "command": self._command,
            "config": config_payload(self._configs),
            "config_sha256": config_hash(self._configs),
            "seed": self._seed,
            "versions": package_versions(),
            "samples": self._samples,
            "outputs": sorted(self._outputs),
            "values": self._values,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        _logger.debug("manifest for %s with %d outputs", self._command, len(self._outputs))
        return write_json(self._manifest_path, payload)
