"""Tensor files: the bit-exact JSON contract used by the command line.

A tensor file is a JSON object ``{"kind", "dim", "components",
"convention"}``.  Components are nested lists in row-major index order
(i, j, k, l); Kahler entries are ``[re, im]`` pairs.  Writing uses the
shortest round-tripping float representation, so save/load is exact.

Readers are strict: files whose components violate the curvature
symmetries beyond ``READER_TOL * scale`` are rejected unless the caller
asks for projection onto the valid class.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InvalidInputError
from .tensors import KahlerTensor, RiemannTensor, make_kahler, make_riemann

READER_TOL = 1e-9

# recorded in every file; informational, not validated on read
CONVENTION = (
    "orthonormal frame components; riemann R[i,j,k,l] real with R[i,j,i,j] "
    "the sectional value of the (i,j)-plane; kahler R[i,j,k,l] complex, "
    "symmetric in slots (1,3) and (2,4) with conj(R) = R.swap(1,2).swap(3,4) "
    "and R[i,i,j,j] the bisectional value; wedge basis {e_i^e_j, i<j} of "
    "unit norm gives operator entries R[(ij),(kl)] = R[i,j,k,l] and "
    "scal = 2*trace"
)


def tensor_to_json(T) -> dict:
    """The JSON object for a tensor (plain dict, ready for json.dump)."""
    if isinstance(T, KahlerTensor):
        c = T.components
        packed = np.stack([c.real, c.imag], axis=-1)
        return {
            "kind": "kahler",
            "dim": T.dim,
            "components": packed.tolist(),
            "convention": CONVENTION,
        }
    if isinstance(T, RiemannTensor):
        return {
            "kind": "riemann",
            "dim": T.dim,
            "components": T.components.tolist(),
            "convention": CONVENTION,
        }
    raise InvalidInputError(f"expected a curvature tensor, got {type(T).__name__}")


def tensor_from_json(obj, project: bool = False):
    """Parse and validate one tensor object.

    ``project`` replaces the symmetry check with orthogonal projection
    onto the valid class, for deliberately raw input.
    """
    if not isinstance(obj, dict):
        raise InvalidInputError("tensor file must hold a JSON object")
    for key in ("kind", "dim", "components"):
        if key not in obj:
            raise InvalidInputError(f"tensor object is missing the {key!r} field")
    kind = obj["kind"]
    if kind not in ("riemann", "kahler"):
        raise InvalidInputError(f"kind must be 'riemann' or 'kahler', got {kind!r}")
    dim = obj["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise InvalidInputError(f"dim must be a positive integer, got {dim!r}")
    try:
        arr = np.asarray(obj["components"], dtype=float)
    except (TypeError, ValueError) as err:
        raise InvalidInputError(f"components are not numeric: {err}") from None

    if kind == "riemann":
        if arr.shape != (dim,) * 4:
            raise InvalidInputError(
                f"riemann components must have shape {(dim,) * 4}, got {arr.shape}"
            )
        if project:
            return make_riemann(arr)
        T = RiemannTensor(dim, arr)
    else:
        if arr.shape != (dim,) * 4 + (2,):
            raise InvalidInputError(
                f"kahler components must have shape {(dim,) * 4 + (2,)} "
                f"([re, im] pairs), got {arr.shape}"
            )
        packed = arr[..., 0] + 1j * arr[..., 1]
        if project:
            return make_kahler(packed)
        T = KahlerTensor(dim, packed)
    T.validate(tol=READER_TOL)
    return T


def save_tensor(path, T) -> None:
    with open(path, "w") as fh:
        json.dump(tensor_to_json(T), fh)
        fh.write("\n")


def load_tensor(path, project: bool = False):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise InvalidInputError(f"no such tensor file: {path}") from None
    except json.JSONDecodeError as err:
        raise InvalidInputError(f"{path} is not valid JSON: {err}") from None
    return tensor_from_json(obj, project=project)
