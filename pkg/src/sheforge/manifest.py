"""Run manifests: enough to replay a CLI invocation bit-identically."""
from dataclasses import asdict, dataclass, field
import os

from . import __version__
from .formats import read_json, write_json
from .kernels import BACKEND

DEFAULT_SEED = 0
SEED_ENV = "SHEFORGE_SEED"


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else DEFAULT_SEED


@dataclass
class RunManifest:
    command: str
    argv: list
    inputs: dict
    outputs: list = field(default_factory=list)
    seed: int = DEFAULT_SEED
    tool_version: str = __version__
    backend: str = BACKEND

    def write(self, path):
        write_json(path, asdict(self))
        return path

    @classmethod
    def read(cls, path):
        d = read_json(path)
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def manifest_path_for(output):
    root, _ = os.path.splitext(output)
    return root + ".manifest.json"
