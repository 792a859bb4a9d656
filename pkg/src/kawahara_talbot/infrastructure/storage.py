import hashlib
import json
import threading
from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import asdict
from pathlib import Path
from typing import override

import numpy as np
import pandas as pd

from ..domain.exceptions import StorageError
from ..domain.models import (
    ConservedQuantities,
    FourierState,
    IntegrationScheme,
    RealGridFunction,
    RunManifest,
    SolverConfig,
    Trajectory,
    is_hermitian,
)


def state_to_dict(state: FourierState) -> dict[str, object]:
    """JSON form ``{"n_modes": N, "coeffs": [[k, re, im], ...]}`` sorted by k."""
    return {
        "n_modes": state.n_modes,
        "coeffs": [
            [int(k), float(c.real), float(c.imag)]
            for k, c in zip(state.wavenumbers, state.coeffs)
        ],
    }


def state_from_dict(data: Mapping[str, object]) -> FourierState:
    try:
        n_modes = int(data["n_modes"])
        modes = {int(k): complex(re, im) for k, re, im in data["coeffs"]}
    except (KeyError, TypeError, ValueError) as e:
        raise StorageError(f"Invalid Fourier state: {e}")
    if any(abs(k) > n_modes for k in modes):
        raise StorageError("Fourier state has coefficients outside its band")
    coeffs = np.array([modes.get(k, 0j) for k in range(-n_modes, n_modes + 1)])
    return FourierState(coeffs, real_symmetric=is_hermitian(coeffs))


def trajectory_to_dict(trajectory: Trajectory) -> dict[str, object]:
    return {
        "config": trajectory.config.as_dict(),
        "times": list(trajectory.times),
        "states": [state_to_dict(state) for state in trajectory.states],
        "conserved": [list(entry.as_tuple()) for entry in trajectory.conserved_log],
        "mean_drift": trajectory.mean_drift,
    }


def trajectory_from_dict(data: Mapping[str, object]) -> Trajectory:
    try:
        raw_config = dict(data["config"])
        raw_config["scheme"] = IntegrationScheme(raw_config.get("scheme", IntegrationScheme.NORMAL_FORM))
        return Trajectory(
            config=SolverConfig(**raw_config),
            times=tuple(float(t) for t in data["times"]),
            states=tuple(state_from_dict(item) for item in data["states"]),
            conserved_log=tuple(ConservedQuantities(*entry) for entry in data["conserved"]),
            mean_drift=float(data.get("mean_drift", 0.0)),
        )
    except StorageError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise StorageError(f"Invalid trajectory file: {e}")


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ResultStorage(ABC):
    """Abstract interface for reading and writing run artifacts."""

    @abstractmethod
    def save_json(self, name: str, payload: Mapping[str, object]) -> Path:
        """Write a JSON document and return its path."""
        pass

    @abstractmethod
    def load_json(self, path: Path) -> dict[str, object]:
        """Read a JSON document."""
        pass

    @abstractmethod
    def save_table(self, name: str, frame: pd.DataFrame) -> Path:
        """Write a CSV table and return its path."""
        pass

    def save_state(self, name: str, state: FourierState) -> Path:
        return self.save_json(name, state_to_dict(state))

    def load_state(self, path: Path) -> FourierState:
        return state_from_dict(self.load_json(path))

    def save_trajectory(self, name: str, trajectory: Trajectory) -> Path:
        return self.save_json(name, trajectory_to_dict(trajectory))

    def load_trajectory(self, path: Path) -> Trajectory:
        return trajectory_from_dict(self.load_json(path))

    def save_grid_function(self, name: str, f: RealGridFunction) -> Path:
        return self.save_table(name, pd.DataFrame({"x": f.grid, "value": f.samples}))

    def save_manifest(self, name: str, manifest: RunManifest) -> Path:
        return self.save_json(name, asdict(manifest))


class FileResultStorage(ResultStorage):
    """Flat-file storage under one output directory."""

    def __init__(self, root: Path):
        self.root: Path = Path(root)
        self._locks: dict[Path, threading.Lock] = {}
        self._guard: threading.Lock = threading.Lock()

    def _lock_for(self, path: Path) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(path, threading.Lock())

    def _target(self, name: str) -> Path:
        path = self.root / name
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageError(f"Cannot create output directory {path.parent}: {e}")
        return path

    @override
    def save_json(self, name: str, payload: Mapping[str, object]) -> Path:
        path = self._target(name)
        try:
            with self._lock_for(path), open(path, "w", encoding="utf-8") as file:
                json.dump(payload, file, ensure_ascii=False, indent=2, sort_keys=True)
                file.write("\n")
        except (OSError, TypeError, ValueError) as e:
            raise StorageError(f"Failed to write {path}: {e}")
        return path

    @override
    def load_json(self, path: Path) -> dict[str, object]:
        try:
            with open(path, "r", encoding="utf-8") as file:
                data = json.load(file)
        except (OSError, json.JSONDecodeError) as e:
            raise StorageError(f"Failed to read {path}: {e}")
        if not isinstance(data, dict):
            raise StorageError(f"{path} does not hold a JSON object")
        return data

    @override
    def save_table(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._target(name)
        try:
            with self._lock_for(path):
                frame.to_csv(path, index=False, float_format="%.17g")
        except OSError as e:
            raise StorageError(f"Failed to write {path}: {e}")
        return path


def load_grid_function(path: Path) -> RealGridFunction:
    """Read an ``x,value`` CSV sampled on the uniform periodic grid."""
    try:
        frame = pd.read_csv(path)
        samples = frame["value"].to_numpy(dtype=np.float64)
    except (OSError, KeyError, ValueError, pd.errors.ParserError) as e:
        raise StorageError(f"Failed to read grid function {path}: {e}")
    return RealGridFunction(samples)


def load_state_file(path: Path) -> FourierState:
    """Read a Fourier state from JSON, independent of any output directory."""
    return FileResultStorage(Path(path).parent).load_state(path)


def create_file_storage(root: Path) -> FileResultStorage:
    """Factory function to create file storage."""
    return FileResultStorage(root)
