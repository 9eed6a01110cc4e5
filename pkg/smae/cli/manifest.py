"""Run manifests: everything needed to replay a run."""

import hashlib
import json
import os
from typing import Any, Dict, List, Optional

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin

MANIFEST_SUFFIX = ".manifest.json"


class ManifestErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


def md5_hash(filename: str) -> str:
    """Calculate MD5 hash of file.

    :param filename: A path to a file
    :return: MD5sum of file
    """
    md5 = hashlib.md5()
    with open(filename, "rb") as f:
        for chunk in iter(lambda: f.read(4096), b""):
            md5.update(chunk)
    return md5.hexdigest()


def manifest_path(output: str) -> str:
    """Get the manifest path written beside an output file."""
    return output + MANIFEST_SUFFIX


class RunManifest(ErrorGeneratorMixin):
    """Resolved configuration, seed, inputs and outcome of a command."""

    MANIFEST_ERR_READ = 1000
    MANIFEST_ERR_FIELD = 1001
    MANIFEST_ERR_DIGEST = 1002
    MANIFEST_ERR_INPUT = 1003
    _ERRORS = {
        MANIFEST_ERR_READ: ManifestErrorDescriptor(
            MANIFEST_ERR_READ,
            "Unreadable manifest",
            "cannot read manifest {path}: {reason}",
        ),
        MANIFEST_ERR_FIELD: ManifestErrorDescriptor(
            MANIFEST_ERR_FIELD,
            "Missing field",
            'manifest {path} lacks "{field}"',
        ),
        MANIFEST_ERR_DIGEST: ManifestErrorDescriptor(
            MANIFEST_ERR_DIGEST,
            "Digest mismatch",
            "input {role} ({path}) changed since the run: "
            "md5 {got}, recorded {want}",
        ),
        MANIFEST_ERR_INPUT: ManifestErrorDescriptor(
            MANIFEST_ERR_INPUT,
            "Unreadable input",
            "cannot hash input {path}: {reason}",
        ),
    }

    REQUIRED = ("command", "version", "seed", "config", "inputs")

    def __init__(
        self,
        command: str,
        version: str,
        seed: Optional[int],
        config: Optional[Dict[str, Any]] = None,
        inputs: Optional[Dict[str, Dict[str, str]]] = None,
        log: Optional[List[float]] = None,
        wall_clock: float = 0.0,
        options: Optional[Dict[str, Any]] = None,
    ):
        """Initialize.

        :param command: Subcommand name
        :param version: Toolkit version
        :param seed: Master seed
        :param config: Resolved configuration
        :param inputs: Role to {path, md5}
        :param log: Per-epoch losses
        :param wall_clock: Elapsed seconds
        :param options: Other command options
        """
        self.command = command
        self.version = version
        self.seed = seed
        self.config = config
        self.inputs = dict(inputs or {})
        self.log = list(log or [])
        self.wall_clock = wall_clock
        self.options = dict(options or {})

    def add_input(self, role: str, path: str):
        """Record an input file and its digest.

        :param role: Input role, e.g. corpus
        :param path: File path
        """
        try:
            digest = md5_hash(path)
        except OSError as ex:
            raise self.get_error_from_code(
                self.MANIFEST_ERR_INPUT, path=path, reason=ex, _exception=ex
            )
        self.inputs[role] = {"path": path, "md5": digest}

    def check_input(self, role: str, path: Optional[str] = None) -> str:
        """Check that an input still has its recorded digest.

        :param role: Input role
        :param path: Location to check, defaults to the recorded path
        :return: The checked path
        """
        recorded = self.inputs[role]
        path = path or recorded["path"]
        try:
            digest = md5_hash(path)
        except OSError as ex:
            raise self.get_error_from_code(
                self.MANIFEST_ERR_INPUT, path=path, reason=ex, _exception=ex
            )
        if digest != recorded["md5"]:
            raise self.get_error_from_code(
                self.MANIFEST_ERR_DIGEST,
                role=role,
                path=path,
                got=digest,
                want=recorded["md5"],
            )
        return path

    def to_dict(self) -> Dict[str, Any]:
        """Get dictionary representation."""
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "log": self.log,
            "wall_clock": self.wall_clock,
            "options": self.options,
        }

    def save(self, output: str) -> str:
        """Write beside an output file.

        :param output: The command's output path
        :return: Manifest path
        """
        path = manifest_path(output)
        try:
            with open(path, "w") as manifest_file:
                json.dump(
                    self.to_dict(), manifest_file, indent=2, sort_keys=True
                )
                manifest_file.write("\n")
        except OSError as ex:
            raise DataError(
                "cannot write manifest {}: {}".format(path, ex), exception=ex
            )
        return path

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        """Read a manifest file."""
        try:
            with open(path, "r") as manifest_file:
                data = json.load(manifest_file)
        except (OSError, ValueError) as ex:
            raise cls.get_error_from_code(
                cls.MANIFEST_ERR_READ, path=path, reason=ex, _exception=ex
            )
        if not isinstance(data, dict):
            raise cls.get_error_from_code(
                cls.MANIFEST_ERR_READ, path=path, reason="not an object"
            )
        for field in cls.REQUIRED:
            if field not in data:
                raise cls.get_error_from_code(
                    cls.MANIFEST_ERR_FIELD, path=path, field=field
                )
        return cls(
            data["command"],
            data["version"],
            data["seed"],
            data["config"],
            data["inputs"],
            data.get("log"),
            data.get("wall_clock", 0.0),
            data.get("options"),
        )


def relative_to_manifest(manifest_file: str, path: str) -> str:
    """Resolve a recorded relative path against the manifest's directory."""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(os.path.dirname(manifest_file), path)
