"""File formats for the CLI: key-value model files and plain data CSVs.

Model files are line-oriented key-value text::

    theta0: 1.0 2.0
    sigma: 1.0 0.5
    sigma: 0.5 2.0
    noise_var: 1.0

with one ``sigma`` line per matrix row. Data CSVs carry the response in
the first column and the covariates in the remaining columns; an
optional single non-numeric header row is skipped.
"""

from __future__ import annotations

import numpy as np

from .core import Dataset, ModelSpec
from .exceptions import ContractViolationError


def write_model_file(path: str, model: ModelSpec) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta0: " + " ".join(repr(float(v)) for v in model.theta0) + "\n")
        for row in model.sigma:
            fh.write("sigma: " + " ".join(repr(float(v)) for v in row) + "\n")
        fh.write(f"noise_var: {float(model.noise_var)!r}\n")


def read_model_file(path: str) -> ModelSpec:
    theta0 = None
    sigma_rows = []
    noise_var = 0.0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ContractViolationError(f"{path}:{lineno}: expected 'key: values'")
            key, _, rest = line.partition(":")
            key = key.strip().lower()
            try:
                values = [float(tok) for tok in rest.split()]
            except ValueError as exc:
                raise ContractViolationError(f"{path}:{lineno}: non-numeric value") from exc
            if key == "theta0":
                theta0 = np.array(values)
            elif key == "sigma":
                sigma_rows.append(values)
            elif key == "noise_var":
                if len(values) != 1:
                    raise ContractViolationError(f"{path}:{lineno}: noise_var takes one value")
                noise_var = values[0]
            else:
                raise ContractViolationError(f"{path}:{lineno}: unknown key {key!r}")
    if theta0 is None or not sigma_rows:
        raise ContractViolationError(f"{path}: model file needs theta0 and sigma rows")
    return ModelSpec(theta0=theta0, sigma=np.array(sigma_rows), noise_var=noise_var)


def read_data_csv(path: str) -> Dataset:
    """Load a dataset: first column y, remaining columns x."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ContractViolationError(f"{path}: empty data file")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1  # header row
    rows = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ContractViolationError(f"{path}:{lineno}: non-numeric cell") from exc
    arr = np.array(rows)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ContractViolationError(f"{path}: need a y column plus at least one x column")
    return Dataset(x=arr[:, 1:], y=arr[:, 0])


def write_data_csv(path: str, data: Dataset) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for yi, xi in zip(data.y, data.x):
            fh.write(",".join(repr(float(v)) for v in (yi, *xi)) + "\n")


def read_vector_file(path: str) -> np.ndarray:
    """Whitespace / newline separated floats."""
    with open(path, "r", encoding="utf-8") as fh:
        toks = fh.read().replace(",", " ").split()
    try:
        return np.array([float(t) for t in toks])
    except ValueError as exc:
        raise ContractViolationError(f"{path}: non-numeric entry in vector file") from exc
