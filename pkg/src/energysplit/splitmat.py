"""Per-neuron splitting matrices, exact splitting indexes and matrix-free products.

For a neuron ``sigma = h(theta . x~)`` the splitting matrix is

    S = mean_x [ g(x) * h''(z(x)) * x~ x~^T ]

where ``g`` is the gradient of the example's loss w.r.t. the neuron output.
Everything here is built from a single forward/backward capture pass; only
``splitting_matrix`` ever forms a d x d array.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .linalg import SymMatrix, sym_eig_min
from .net import Network, NeuronRef, loss_and_grads


@dataclass
class NeuronCurvature:
    """Rows ``x~`` and scalar weights ``g * h''(z)`` whose weighted outer-product mean is S."""

    inputs: np.ndarray
    coef: np.ndarray

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def __len__(self):
        return len(self.coef)

    def subset(self, idx) -> "NeuronCurvature":
        return NeuronCurvature(self.inputs[idx], self.coef[idx])

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"vector of shape {v.shape} does not match neuron dim {self.dim}")
        return (self.coef * (self.inputs @ v)) @ self.inputs / len(self.coef)

    def matrix(self) -> SymMatrix:
        s = (self.inputs * self.coef[:, None]).T @ self.inputs / len(self.coef)
        return SymMatrix.symmetrize(s)


@dataclass
class SplitIndex:
    neuron: NeuronRef
    lambda_min: float
    v_min: np.ndarray
    method: str = "exact"


def curvatures(net: Network, x, y, refs=None) -> dict[NeuronRef, NeuronCurvature]:
    """Curvature captures for ``refs`` (default: all hidden neurons) from one pass."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if len(x) == 0:
        raise ValueError("empty dataset")
    _, _, cap = loss_and_grads(net, x, y)
    refs = net.hidden_refs() if refs is None else refs
    coefs = [g * net.act.d2h(z) for z, g in zip(cap.pre, cap.out_grad)]
    result = {}
    for ref in refs:
        net.check_ref(ref)
        result[ref] = NeuronCurvature(cap.inputs[ref.layer], coefs[ref.layer][:, ref.index])
    return result


def splitting_matrix(net: Network, data: Dataset, ref: NeuronRef) -> SymMatrix:
    return curvatures(net, data.x_train, data.y_train, [ref])[ref].matrix()


def index_from_matrix(ref: NeuronRef, s: SymMatrix) -> SplitIndex:
    pair = sym_eig_min(s)
    return SplitIndex(ref, pair.value, pair.vector, "exact")


def splitting_index_exact(net: Network, data: Dataset, ref: NeuronRef) -> SplitIndex:
    return index_from_matrix(ref, splitting_matrix(net, data, ref))


def exact_indexes(net: Network, data: Dataset) -> dict[NeuronRef, SplitIndex]:
    """Exact splitting index of every hidden neuron."""
    caps = curvatures(net, data.x_train, data.y_train)
    return {ref: index_from_matrix(ref, c.matrix()) for ref, c in caps.items()}


def splitting_matvec(net: Network, x, y, vs) -> dict[NeuronRef, np.ndarray]:
    """``S_l v_l`` for every requested neuron, averaged over the batch ``(x, y)``.

    Equivalent to differentiating the batch loss w.r.t. an auxiliary term
    ``eta_l . (h''(z) x~ x~^T v_l)`` added to each neuron's output, at eta = 0.
    """
    caps = curvatures(net, x, y, list(vs))
    return {ref: caps[ref].matvec(v) for ref, v in vs.items()}


def total_gain(indexes) -> float:
    """Sum of splitting indexes of a neuron set (the first-order loss change per eps^2/2)."""
    return float(sum(ix.lambda_min for ix in indexes))


def dump_csv(s: SymMatrix, path) -> None:
    rows = [f"d={s.dim}"]
    rows += [",".join(repr(float(a)) for a in row) for row in s.entries]
    Path(path).write_text("\n".join(rows) + "\n")


def load_csv_matrix(path) -> SymMatrix:
    lines = Path(path).read_text().split()
    if not lines or not lines[0].startswith("d="):
        raise ValueError(f"{path}: missing 'd=<dim>' header")
    d = int(lines[0][2:])
    a = np.array([[float(c) for c in line.split(",")] for line in lines[1:]])
    if a.shape != (d, d):
        raise ValueError(f"{path}: header says d={d} but body is {a.shape}")
    return SymMatrix(a)
