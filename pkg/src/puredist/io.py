"""JSON/CSV serialization with deterministic formatting.

States: {"registers": [{"label": "A", "dim": 2}, ...],
         "matrix": [[re, im], ...]}  (row-major pairs)
POVMs:  {"elements": [matrix, ...], "register": "A", "labels": [...]}

JSON numbers are emitted with 17 significant digits, CSV uses '.' decimals
regardless of locale, and keys are sorted, so identical inputs produce
byte-identical outputs.
"""

import json

import numpy as np

from .states import DensityOperator, Povm


def _matrix_to_pairs(mat: np.ndarray) -> list:
    return [[float(np.real(z)), float(np.imag(z))]
            for z in np.asarray(mat, dtype=complex).reshape(-1)]


def _pairs_to_matrix(pairs, dim: int) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in pairs])
    if flat.size != dim * dim:
        raise ValueError(f"matrix has {flat.size} entries, expected {dim * dim}")
    return flat.reshape(dim, dim)


def state_to_dict(state: DensityOperator) -> dict:
    return {
        "registers": [{"label": l, "dim": d} for l, d in state.registers],
        "matrix": _matrix_to_pairs(state.matrix),
    }


def state_from_dict(d: dict) -> DensityOperator:
    regs = [(r["label"], int(r["dim"])) for r in d["registers"]]
    total = int(np.prod([dim for _, dim in regs]))
    return DensityOperator(regs, _pairs_to_matrix(d["matrix"], total))


def povm_to_dict(povm: Povm) -> dict:
    return {
        "register": povm.register,
        "labels": [str(l) for l in povm.labels],
        "elements": [_matrix_to_pairs(e) for e in povm.elements],
    }


def povm_from_dict(d: dict) -> Povm:
    elems = d["elements"]
    dim = int(round(np.sqrt(len(elems[0]))))
    mats = [_pairs_to_matrix(e, dim) for e in elems]
    return Povm(mats, labels=d.get("labels"), register=d.get("register", "A"))


def load_state(path: str) -> DensityOperator:
    with open(path) as fh:
        return state_from_dict(json.load(fh))


def load_povm(path: str) -> Povm:
    with open(path) as fh:
        return povm_from_dict(json.load(fh))


def save_state(state: DensityOperator, path: str):
    with open(path, "w") as fh:
        fh.write(dumps(state_to_dict(state)))


def save_povm(povm: Povm, path: str):
    with open(path, "w") as fh:
        fh.write(dumps(povm_to_dict(povm)))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if np.isnan(v):
            return '"nan"'
        if np.isinf(v):
            return '"inf"' if v > 0 else '"-inf"'
        return format(v, ".17g")
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        inner = ",".join(f"{json.dumps(str(k))}:{_fmt(v)}"
                         for k, v in sorted(value.items(), key=lambda kv: str(kv[0])))
        return "{" + inner + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        seq = value.tolist() if isinstance(value, np.ndarray) else value
        return "[" + ",".join(_fmt(v) for v in seq) + "]"
    raise TypeError(f"cannot serialize {type(value)}")


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _fmt(obj)


def csv_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path_or_handle, columns, rows):
    own = isinstance(path_or_handle, str)
    fh = open(path_or_handle, "w") if own else path_or_handle
    try:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(csv_cell(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()
