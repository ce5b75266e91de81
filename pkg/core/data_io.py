# data_io.py

import csv
import io
import json
import logging
from dataclasses import MISSING, asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, TextIO, Union

import numpy as np
from sklearn.datasets import load_svmlight_file

from .errors import HogwildError
from .problem import Dataset
from .trace import TRACE_COLUMNS, Trace

logger = logging.getLogger(__name__)

CODE_VERSION = "1.0.0"
MANIFEST_SUFFIX = ".manifest.json"

PathLike = Union[str, Path]


@dataclass
class RunManifest:
    """Everything needed to replay a sequential run"""
    objective: Dict[str, Any]
    schedule: Dict[str, Any]
    D: int
    fraction: Optional[float]
    delay: Dict[str, Any]
    seeds: List[int]
    engine: str
    threads: int
    iterations: int
    checkpoints: Dict[str, Any]
    dataset: Dict[str, Any]
    constants: Dict[str, Any]
    sparsity: Dict[str, Any]
    partition_seed: int
    w0: str = "zeros"
    code_version: str = CODE_VERSION
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        known = set(cls.__dataclass_fields__)
        missing = [name for name, spec in cls.__dataclass_fields__.items()
                   if name not in data and spec.default is MISSING and spec.default_factory is MISSING]
        if missing:
            raise HogwildError("TRACE_SCHEMA", f"Manifest is missing {missing}", {"missing": missing})
        return cls(**{key: value for key, value in data.items() if key in known})


def create_document(doc_type: str, payload: Dict[str, Any]) -> Dict:
    """Wrap a payload in the {type, timestamp, payload} envelope"""
    return {
        "type": doc_type,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "payload": payload
    }


def write_document(doc_type: str, payload: Dict[str, Any], destination: PathLike) -> Path:
    path = Path(destination)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(create_document(doc_type, payload), f, indent=2, default=json_default)
    except OSError as e:
        raise HogwildError("IO_ERROR", f"Failed to write {path}: {e}")
    logger.info(f"Wrote {doc_type} to {path}")
    return path


def read_document(source: PathLike, doc_type: Optional[str] = None) -> Dict[str, Any]:
    path = Path(source)
    try:
        with open(path) as f:
            document = json.load(f)
    except OSError as e:
        raise HogwildError("IO_ERROR", f"Failed to read {path}: {e}")
    except json.JSONDecodeError as e:
        raise HogwildError("TRACE_SCHEMA", f"{path} is not valid JSON: {e}")
    if not isinstance(document, dict) or "payload" not in document:
        raise HogwildError("TRACE_SCHEMA", f"{path} has no payload")
    if doc_type is not None and document.get("type") != doc_type:
        raise HogwildError(
            "TRACE_SCHEMA",
            f"{path} holds a '{document.get('type')}' document, expected '{doc_type}'"
        )
    return document["payload"]


def json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


# LIBSVM

def _malformed(line_number: int, message: str) -> HogwildError:
    return HogwildError("MALFORMED_LIBSVM", f"line {line_number}: {message}", {"line": line_number})


def parse_libsvm(stream: Iterable[str], dimension: Optional[int] = None) -> Dataset:
    """Read "label idx:val ..." lines with 1-based strictly ascending indices

    Lines are checked here so errors carry their line number; the cleaned
    text (comments and qid tokens dropped) is then read by load_svmlight_file.
    """
    cleaned = []
    max_index = 0
    for line_number, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            float(fields[0])
        except ValueError:
            raise _malformed(line_number, f"non-numeric label '{fields[0]}'")
        kept = [fields[0]]
        previous = 0
        for token in fields[1:]:
            if token.startswith("qid:"):
                continue
            index_text, sep, value_text = token.partition(":")
            if not sep:
                raise _malformed(line_number, f"expected idx:val, got '{token}'")
            try:
                index = int(index_text)
                value = float(value_text)
            except ValueError:
                raise _malformed(line_number, f"non-numeric field '{token}'")
            if index < 1:
                raise _malformed(line_number, f"index {index} is not 1-based")
            if index <= previous:
                raise _malformed(line_number, f"non-ascending index {index} after {previous}")
            if not np.isfinite(value):
                raise _malformed(line_number, f"non-finite value '{value_text}'")
            previous = index
            kept.append(token)
        max_index = max(max_index, previous)
        cleaned.append(" ".join(kept))

    if not cleaned:
        raise HogwildError("MALFORMED_LIBSVM", "No samples found")
    d = max_index
    if dimension is not None:
        if dimension < max_index:
            raise HogwildError(
                "DIMENSION_MISMATCH",
                f"Requested dimension {dimension} is below the largest index {max_index}"
            )
        d = dimension
    features, raw_labels = load_svmlight_file(
        io.BytesIO("\n".join(cleaned).encode("utf-8")), n_features=d, dtype=np.float64, zero_based=False
    )
    labels, rule = remap_labels(raw_labels)
    logger.debug(f"Parsed {len(cleaned)} LIBSVM rows, d={d}, label rule {rule}")
    return Dataset(features.tocsr(), labels, rule)


def remap_labels(labels: np.ndarray):
    """Two distinct labels become {-1, +1} (max -> +1); anything else passes through"""
    distinct = np.unique(labels)
    if len(distinct) != 2 or (distinct[0] == -1 and distinct[1] == 1):
        return labels, "identity"
    low, high = distinct
    rule = f"{_format_label(low)}->-1,{_format_label(high)}->+1"
    return np.where(labels == high, 1.0, -1.0), rule


def _format_label(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def load_libsvm(path: PathLike, dimension: Optional[int] = None) -> Dataset:
    try:
        with open(path) as f:
            dataset = parse_libsvm(f, dimension)
    except OSError as e:
        raise HogwildError("IO_ERROR", f"Failed to read {path}: {e}")
    logger.info(f"Loaded {path}: n={dataset.n}, d={dataset.dimension}")
    return dataset


def write_libsvm(dataset: Dataset, stream: TextIO) -> None:
    """Canonical form: labels and values at full precision, 1-based indices"""
    for i in range(dataset.n):
        indices, values = dataset.row(i)
        tokens = [_format_label(dataset.labels[i])]
        tokens.extend(f"{j + 1}:{float(v)!r}" for j, v in zip(indices, values))
        stream.write(" ".join(tokens) + "\n")


def dump_libsvm(dataset: Dataset) -> str:
    buffer = io.StringIO()
    write_libsvm(dataset, buffer)
    return buffer.getvalue()


# Synthetic problems

@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    s: int
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise HogwildError("INVALID_CONFIG", f"Synthetic n and d must be >= 1, got n={self.n}, d={self.d}")
        if not 1 <= self.s <= self.d:
            raise HogwildError("INVALID_CONFIG", f"Support size must lie in [1, {self.d}], got {self.s}")
        if not 0 <= self.noise < 0.5:
            raise HogwildError("INVALID_CONFIG", f"Label noise must lie in [0, 0.5), got {self.noise}")

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        """Read 'n=1000,d=50,s=5,p=0.05,seed=7'"""
        values = {}
        for item in text.split(","):
            key, sep, value = item.strip().partition("=")
            if not sep:
                raise HogwildError("INVALID_CONFIG", f"Expected key=value in synthetic spec, got '{item}'")
            values[key.strip()] = value.strip()
        unknown = set(values) - {"n", "d", "s", "p", "seed"}
        if unknown:
            raise HogwildError("INVALID_CONFIG", f"Unknown synthetic spec keys: {sorted(unknown)}")
        try:
            return cls(
                n=int(values["n"]),
                d=int(values["d"]),
                s=int(values["s"]),
                noise=float(values.get("p", 0.0)),
                seed=int(values.get("seed", 0)),
            )
        except KeyError as e:
            raise HogwildError("INVALID_CONFIG", f"Synthetic spec is missing {e}")
        except ValueError as e:
            raise HogwildError("INVALID_CONFIG", f"Invalid synthetic spec value: {e}")

    def as_dict(self) -> Dict:
        return {"n": self.n, "d": self.d, "s": self.s, "p": self.noise, "seed": self.seed}


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sparse Gaussian rows labelled by a hidden unit hyperplane, flipped with probability p"""
    rng = np.random.default_rng(spec.seed)
    supports = np.sort(np.argsort(rng.random((spec.n, spec.d)), axis=1)[:, :spec.s], axis=1)
    values = rng.standard_normal((spec.n, spec.s))
    hyperplane = rng.standard_normal(spec.d)
    hyperplane /= np.linalg.norm(hyperplane)

    margins = np.einsum("ij,ij->i", values, hyperplane[supports])
    labels = np.where(margins >= 0, 1.0, -1.0)
    flips = rng.random(spec.n) < spec.noise
    labels[flips] = -labels[flips]

    rows = list(zip(supports, values))
    dataset = Dataset.from_rows(rows, labels, spec.d)
    logger.debug(f"Generated synthetic dataset {spec.as_dict()}, {int(flips.sum())} labels flipped")
    return dataset


# Traces

def manifest_path(trace_path: PathLike) -> Path:
    path = Path(trace_path)
    return path.with_name(path.stem + MANIFEST_SUFFIX)


def write_trace_csv(trace: Trace, destination: PathLike) -> Path:
    if len(trace) == 0:
        raise HogwildError("TRACE_SCHEMA", "Refusing to write an empty trace")
    path = Path(destination)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRACE_COLUMNS)
            for k in range(len(trace)):
                writer.writerow([
                    int(trace.t[k]),
                    repr(float(trace.t_prime[k])),
                    repr(float(trace.objective_gap[k])),
                    repr(float(trace.squared_distance[k])),
                    trace.seed,
                ])
    except OSError as e:
        raise HogwildError("IO_ERROR", f"Failed to write {path}: {e}")
    manifest = dict(trace.manifest)
    manifest["aggregated"] = trace.aggregated
    write_document("trace_manifest", manifest, manifest_path(path))
    logger.info(f"Wrote {len(trace)} checkpoints to {path}")
    return path


def read_trace_csv(source: PathLike) -> Trace:
    path = Path(source)
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            header = reader.fieldnames or []
            for column in TRACE_COLUMNS:
                if column not in header:
                    raise HogwildError(
                        "TRACE_SCHEMA",
                        f"{path} is missing column '{column}'",
                        {"column": column}
                    )
            records = list(reader)
    except OSError as e:
        raise HogwildError("IO_ERROR", f"Failed to read {path}: {e}")

    seeds = {int(record["seed"]) for record in records}
    if len(seeds) > 1:
        raise HogwildError("TRACE_SCHEMA", f"{path} mixes seeds {sorted(seeds)}")

    manifest: Dict[str, Any] = {}
    if manifest_path(path).exists():
        manifest = read_document(manifest_path(path), "trace_manifest")
    aggregated = bool(manifest.get("aggregated", False))
    try:
        return Trace(
            manifest=manifest,
            t=[int(record["t"]) for record in records],
            t_prime=[float(record["t_prime"]) for record in records],
            objective_gap=[float(record["objective_gap"]) for record in records],
            squared_distance=[float(record["squared_distance"]) for record in records],
            seed=seeds.pop() if seeds else 0,
            aggregated=aggregated,
        )
    except ValueError as e:
        raise HogwildError("TRACE_SCHEMA", f"{path} has a non-numeric field: {e}")
