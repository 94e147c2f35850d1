"""Galerkin operators of the modal reduction.

Index conventions (all 0-based, derivatives with respect to x):

    Cmat[m, n]       = (s_n', s_m)
    S[i, j, k, l]    = int s_i'' s_j'' s_k' s_l' dx
    I[i, j, k, l]    = int g_ij g_kl dx,      g_ij(x) = int_0^x s_i' s_j'

Each entry is reduced by its own dot product over the grid, so an entry's value
does not depend on the truncation N it was assembled with.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .modes import ModeBasis

log = logging.getLogger(__name__)

CACHE_FORMAT = "inextbeam-tensors/1"


@dataclass(frozen=True, eq=False)
class TensorSet:
    N: int
    L: float
    D: float
    kappa: np.ndarray
    Kdiag: np.ndarray  # D kappa^4
    Hdiag: np.ndarray  # kappa^4
    Cmat: np.ndarray
    S: np.ndarray
    I: np.ndarray
    tip: np.ndarray  # s_n(L)

    def truncate(self, N: int) -> "TensorSet":
        if not 1 <= N <= self.N:
            raise ValueError(f"cannot truncate {self.N} modes to {N}")
        b = slice(0, N)
        return TensorSet(
            N, self.L, self.D, self.kappa[b], self.Kdiag[b], self.Hdiag[b],
            self.Cmat[b, b], self.S[b, b, b, b], self.I[b, b, b, b], self.tip[b],
        )

    def with_stiffness(self, D: float) -> "TensorSet":
        return TensorSet(self.N, self.L, D, self.kappa, D * self.Hdiag, self.Hdiag,
                         self.Cmat, self.S, self.I, self.tip)


def _pairs(N: int) -> list[tuple[int, int]]:
    return list(combinations_with_replacement(range(N), 2))


def _pair_gram(left: np.ndarray, right: np.ndarray, weights: np.ndarray, symmetric: bool) -> np.ndarray:
    P = left.shape[0]
    out = np.empty((P, P))
    lw = left * weights
    for a in range(P):
        for b in range(a if symmetric else 0, P):
            out[a, b] = np.dot(lw[a], right[b])
            if symmetric:
                out[b, a] = out[a, b]
    return out


def _expand(reduced: np.ndarray, N: int) -> np.ndarray:
    """Mirror a pair-indexed (P, P) table into the full N^4 tensor."""
    idx = np.empty((N, N), dtype=int)
    for p, (i, j) in enumerate(_pairs(N)):
        idx[i, j] = idx[j, i] = p
    return reduced[idx[:, :, None, None], idx[None, None, :, :]]


def assemble_linear(basis: ModeBasis, D: float = 1.0) -> dict[str, np.ndarray]:
    s0, s1 = basis.samples[0], basis.samples[1]
    w = basis.grid.weights
    N = basis.N
    Cmat = np.array([[np.dot(s0[m] * w, s1[n]) for n in range(N)] for m in range(N)])
    Hdiag = basis.kappa**4
    return {"Kdiag": D * Hdiag, "Hdiag": Hdiag, "Cmat": Cmat}


def assemble_stiffness_tensor(basis: ModeBasis) -> np.ndarray:
    s1, s2 = basis.samples[1], basis.samples[2]
    pairs = _pairs(basis.N)
    curv = np.stack([s2[i] * s2[j] for i, j in pairs])
    slope = np.stack([s1[k] * s1[l] for k, l in pairs])
    return _expand(_pair_gram(curv, slope, basis.grid.weights, symmetric=False), basis.N)


def running_slope_products(basis: ModeBasis) -> np.ndarray:
    """g_ij(x) = int_0^x s_i' s_j' on the grid for i <= j; shape (P, M)."""
    s1 = basis.samples[1]
    return basis.grid.cumulative(np.stack([s1[i] * s1[j] for i, j in _pairs(basis.N)]))


def assemble_inertia_tensor(basis: ModeBasis) -> np.ndarray:
    g = running_slope_products(basis)
    return _expand(_pair_gram(g, g, basis.grid.weights, symmetric=True), basis.N)


def assemble(basis: ModeBasis, D: float = 1.0) -> TensorSet:
    lin = assemble_linear(basis, D)
    return TensorSet(
        N=basis.N, L=basis.L, D=D, kappa=basis.kappa.copy(),
        Kdiag=lin["Kdiag"], Hdiag=lin["Hdiag"], Cmat=lin["Cmat"],
        S=assemble_stiffness_tensor(basis), I=assemble_inertia_tensor(basis),
        tip=basis.tip_values.copy(),
    )


# -- cache file -------------------------------------------------------------

_ARRAYS = ("kappa", "Hdiag", "Cmat", "S", "I", "tip")


def _checksum(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in _ARRAYS:
        a = np.ascontiguousarray(arrays[name], dtype="<f8")
        h.update(name.encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def cache_key(basis: ModeBasis) -> str:
    return f"N{basis.N}_L{basis.L!r}_{basis.grid.rule}{basis.grid.M}_{basis.grid.fingerprint}"


def save_tensors(path: str | os.PathLike, ts: TensorSet, basis: ModeBasis | None = None) -> dict:
    """Write the D-independent operators with a JSON header and checksum (``.npz``)."""
    arrays = {name: np.asarray(getattr(ts, name), dtype="<f8") for name in _ARRAYS}
    header = {
        "format": CACHE_FORMAT,
        "N": ts.N,
        "L": ts.L,
        "M": basis.grid.M if basis is not None else None,
        "rule": basis.grid.rule if basis is not None else None,
        "grid": basis.grid.fingerprint if basis is not None else None,
        "checksum": _checksum(arrays),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # unique temp name so concurrent writers never clash; the rename is atomic
    with tempfile.NamedTemporaryFile(dir=path.parent, prefix=path.name, suffix=".tmp", delete=False) as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
    os.replace(fh.name, path)
    return header


def load_tensors(path: str | os.PathLike, D: float = 1.0) -> tuple[TensorSet, dict]:
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != CACHE_FORMAT:
            raise ValueError(f"{path}: not a tensor cache file")
        arrays = {name: data[name] for name in _ARRAYS}
    if _checksum(arrays) != header["checksum"]:
        raise ValueError(f"{path}: checksum mismatch")
    ts = TensorSet(N=header["N"], L=header["L"], D=D, Kdiag=D * arrays["Hdiag"], **arrays)
    return ts, header


def cached_assemble(basis: ModeBasis, D: float = 1.0, cache_dir: str | os.PathLike | None = None) -> TensorSet:
    """``assemble`` backed by an on-disk cache keyed by (N, L, grid)."""
    if cache_dir is None:
        return assemble(basis, D)
    path = Path(cache_dir) / f"{cache_key(basis)}.npz"
    if path.exists():
        try:
            ts, _ = load_tensors(path, D)
            return ts
        except (ValueError, OSError, KeyError) as exc:
            log.warning("ignoring unreadable tensor cache %s: %s", path, exc)
    ts = assemble(basis, D)
    save_tensors(path, ts, basis)
    return ts
