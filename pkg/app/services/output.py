import csv
import hashlib
import logging
import struct
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence, Tuple, Union

import numpy as np
import orjson
import scipy

from ..core.config import settings
from ..core.exceptions import BlowUpError
from ..models.state import ExtendedState, SystemModel
from ..schemas.config import ExperimentConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _ensure_parent(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: PathLike, columns: Mapping[str, Sequence[Any]]) -> Path:
    """
    Header row plus one row per sample; floats in shortest round-trip form
    """
    path = _ensure_parent(Path(path))
    names = list(columns)
    rows = zip(*(columns[name] for name in names)) if names else iter(())
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info("Wrote %s", path)
    return path


def read_csv(path: PathLike) -> Dict[str, np.ndarray]:
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [list(map(float, row)) for row in reader]
    data = np.array(rows).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "model_dump"):
        return obj.model_dump(mode="json")
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def dumps(payload: Any) -> bytes:
    return orjson.dumps(
        payload,
        default=_default,
        option=orjson.OPT_INDENT_2
        | orjson.OPT_SORT_KEYS
        | orjson.OPT_SERIALIZE_NUMPY
        | orjson.OPT_NON_STR_KEYS,
    )


def write_json(path: PathLike, payload: Any) -> Path:
    path = _ensure_parent(Path(path))
    if hasattr(payload, "model_dump"):
        payload = payload.model_dump(mode="json")
    path.write_bytes(dumps(payload))
    logger.info("Wrote %s", path)
    return path


def write_snapshot(path: PathLike, state: ExtendedState, model: SystemModel) -> Path:
    """
    Little-endian float64 stream: N, J, u (N values), eta (N x J, row-major)
    """
    path = _ensure_parent(Path(path))
    eta = np.ascontiguousarray(state.eta_matrix(model.grid), dtype="<f8")
    n, j = eta.shape
    with path.open("wb") as handle:
        handle.write(struct.pack("<2d", float(n), float(j)))
        handle.write(np.ascontiguousarray(state.u.coeffs, dtype="<f8").tobytes())
        handle.write(eta.tobytes())
    return path


def read_snapshot(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    raw = np.fromfile(Path(path), dtype="<f8")
    n, j = int(raw[0]), int(raw[1])
    u = raw[2 : 2 + n]
    eta = raw[2 + n : 2 + n + n * j].reshape(n, j)
    return u, eta


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config.canonical_json()).hexdigest()


def write_manifest(
    output_dir: PathLike, config: ExperimentConfig, seed: int, command: str, artifacts: Sequence[str] = ()
) -> Path:
    manifest = {
        "command": command,
        "config_hash": config_hash(config),
        "seed": seed,
        "versions": {
            settings.PROJECT_NAME: settings.VERSION,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "artifacts": sorted(artifacts),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return write_json(Path(output_dir) / "manifest.json", manifest)


def write_spectral_profile(path: PathLike, alpha: Sequence[float], profile: Sequence[float]) -> Path:
    k = list(range(1, len(profile) + 1))
    return write_csv(path, {"k": k, "alpha_k": list(alpha)[: len(profile)], "mean_uk_sq": list(profile)})


def write_blowup_bundle(output_dir: PathLike, error: BlowUpError, model: SystemModel) -> Path:
    """
    Last finite state plus the error as JSON
    """
    output_dir = Path(output_dir) / "blowup"
    if isinstance(error.last_state, ExtendedState):
        write_snapshot(output_dir / "last_state.bin", error.last_state, model)
    payload = error.to_dict()
    if isinstance(error.last_state, ExtendedState):
        payload["t"] = error.last_state.t
        payload["u_norm_sq"] = float(np.sum(error.last_state.u.coeffs ** 2))
    return write_json(output_dir / "blowup.json", payload)
