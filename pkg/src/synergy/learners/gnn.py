"""Graph neural network over r-radius vertex types, trained end to end on pair synergy.

Each drug graph is embedded independently (shared weights for both drugs):
vertex vectors come from an embedding table indexed by r-radius type, then
``layers`` updates ``h_v <- relu(W_l^T (h_v + sum_{u in N(v)} h_u))`` and a mean
readout. The prediction head is an MLP on ``[emb_a | emb_b | cell]``.

Every reduction over vertices is done on sorted operands and the per-vertex
linear map accumulates in a fixed order, so a graph's embedding is bit-for-bit
independent of how its vertices are numbered.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field

import numpy as np

from synergy.errors import ConfigError, DivergenceError, ShapeError
from synergy.learners.base import Regressor
from synergy.learners.neural import FcnnConfig, dropout_masks, init_mlp, mlp_backward, mlp_forward
from synergy.molgraph import MolecularGraph, SubgraphDictionary, assign_r_radius_types


@dataclass(frozen=True)
class GnnConfig:
    embed_dim: int = 25
    radius: int = 2
    layers: int = 3
    head: FcnnConfig = field(default_factory=lambda: FcnnConfig(hidden=(3000, 1500)))
    epochs: int = 1000
    seed: int = 0
    use_bond_order: bool = True

    def __post_init__(self):
        if int(self.embed_dim) < 1:
            raise ConfigError("must be a positive integer", "embed_dim")
        if int(self.radius) < 0:
            raise ConfigError("must be a non-negative integer", "radius")
        if int(self.layers) < 1:
            raise ConfigError("must be a positive integer", "layers")
        if int(self.epochs) < 1:
            raise ConfigError("must be a positive integer", "epochs")


@dataclass(frozen=True)
class GraphInput:
    types: np.ndarray  # (n,) type id per vertex
    nbr: np.ndarray  # (n, max_degree + 1) self + neighbors, padded with n


def prepare_graph(graph: MolecularGraph, dictionary: SubgraphDictionary) -> GraphInput:
    types = np.array(assign_r_radius_types(graph, dictionary.radius, dictionary), dtype=np.intp)
    n = graph.n_atoms
    adj = graph.neighbors()
    width = 1 + max(len(a) for a in adj)
    nbr = np.full((n, width), n, dtype=np.intp)
    for v, a in enumerate(adj):
        nbr[v, 0] = v
        nbr[v, 1:1 + len(a)] = [u for u, _ in a]
    return GraphInput(types, nbr)


def _rowwise_matmul(A, W):
    out = A[:, 0:1] * W[0]
    for k in range(1, W.shape[0]):
        out = out + A[:, k:k + 1] * W[k]
    return out


def graph_forward(emb, weights, g: GraphInput):
    n = len(g.types)
    h = emb[g.types]
    cache = []
    for W in weights:
        ext = np.vstack([h, np.zeros((1, h.shape[1]))])
        agg = np.sort(ext[g.nbr], axis=1).sum(axis=1)
        z = _rowwise_matmul(agg, W)
        cache.append((agg, z))
        h = np.maximum(z, 0.0)
    return np.sort(h, axis=0).sum(axis=0) / n, cache


def graph_backward(emb, weights, g: GraphInput, cache, dg, grads_emb, grads_w):
    n = len(g.types)
    dh = np.broadcast_to(dg / n, (n, len(dg)))
    for layer in range(len(weights) - 1, -1, -1):
        agg, z = cache[layer]
        dz = dh * (z > 0)
        grads_w[layer] += agg.T @ dz
        dagg = dz @ weights[layer].T
        dprev = np.zeros((n + 1, dagg.shape[1]))
        np.add.at(dprev, g.nbr, np.broadcast_to(dagg[:, None, :], g.nbr.shape + (dagg.shape[1],)))
        dh = dprev[:n]
    np.add.at(grads_emb, g.types, dh)


def pair_loss_and_grad(params, n_layers, graphs, ia, ib, cells, y, masks=None):
    """MSE and gradients for flat ``params = [emb, W_1..W_L, head...]``.

    ``graphs`` is a list of GraphInput; ``ia``/``ib`` index into it per row.
    """
    emb, weights, head = params[0], params[1:1 + n_layers], params[1 + n_layers:]
    used = np.unique(np.concatenate([ia, ib]))
    embeds = np.zeros((len(graphs), emb.shape[1]))
    caches = {}
    for gi in used:
        embeds[gi], caches[gi] = graph_forward(emb, weights, graphs[gi])
    X = np.hstack([embeds[ia], embeds[ib], cells])
    pred, head_cache = mlp_forward(head, X, masks)
    diff = pred - y
    loss = float(np.mean(diff * diff))
    head_grads, dX = mlp_backward(head, head_cache, 2.0 * diff / len(y))
    d = emb.shape[1]
    dembeds = np.zeros_like(embeds)
    np.add.at(dembeds, ia, dX[:, :d])
    np.add.at(dembeds, ib, dX[:, d:2 * d])
    grads_emb = np.zeros_like(emb)
    grads_w = [np.zeros_like(W) for W in weights]
    for gi in used:
        graph_backward(emb, weights, graphs[gi], caches[gi], dembeds[gi], grads_emb, grads_w)
    return loss, [grads_emb, *grads_w, *head_grads]


class GNN(Regressor):
    kind = "gnn"

    def __init__(self, config: GnnConfig = GnnConfig()):
        self.config = config

    def _index_graphs(self, pairs):
        index, graphs, ia, ib = {}, [], [], []
        for a, b in pairs:
            for g, out in ((a, ia), (b, ib)):
                if g not in index:
                    index[g] = len(graphs)
                    graphs.append(prepare_graph(g, self.dictionary_))
                out.append(index[g])
        return graphs, np.array(ia, dtype=np.intp), np.array(ib, dtype=np.intp)

    def init_params(self, n_types, cell_dim, rng):
        cfg = self.config
        d = cfg.embed_dim
        emb = rng.uniform(-1.0, 1.0, size=(n_types, d))
        limit = np.sqrt(6.0 / d)
        weights = [rng.uniform(-limit, limit, size=(d, d)) for _ in range(cfg.layers)]
        head = init_mlp((2 * d + cell_dim, *cfg.head.hidden, 1), rng)
        return [emb, *weights, *head]

    def fit(self, pairs, cell_vectors, y):
        cfg = self.config
        pairs = list(pairs)
        cells = np.ascontiguousarray(cell_vectors, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if cells.ndim != 2 or not (len(pairs) == cells.shape[0] == len(y)) or len(y) == 0:
            raise ShapeError("pairs, cell_vectors and y must be aligned and non-empty")
        rng = np.random.default_rng(cfg.seed)
        self.dictionary_ = SubgraphDictionary(cfg.radius, cfg.use_bond_order)
        graphs, ia, ib = self._index_graphs(pairs)
        self.dictionary_.freeze()
        self.cell_dim_ = cells.shape[1]
        self.params_ = self.init_params(self.dictionary_.n_types, self.cell_dim_, rng)
        head = cfg.head
        n = len(y)
        self.loss_history_ = []
        for epoch in range(cfg.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, head.batch_size):
                idx = order[start:start + head.batch_size]
                masks = dropout_masks(self.params_[1 + cfg.layers:], len(idx), head.dropout, rng)
                loss, grads = pair_loss_and_grad(
                    self.params_, cfg.layers, graphs, ia[idx], ib[idx], cells[idx], y[idx], masks
                )
                if not np.isfinite(loss):
                    raise DivergenceError(epoch, loss)
                for param, grad in zip(self.params_, grads):
                    param -= head.learning_rate * grad
                total += loss * len(idx)
            self.loss_history_.append(total / n)
        return self

    def embed(self, graph: MolecularGraph) -> np.ndarray:
        g = prepare_graph(graph, self.dictionary_)
        layers = self.config.layers
        return graph_forward(self.params_[0], self.params_[1:1 + layers], g)[0]

    def predict(self, pairs, cell_vectors):
        pairs = list(pairs)
        if len(pairs) == 0:
            return np.zeros(0)
        cells = np.ascontiguousarray(cell_vectors, dtype=np.float64)
        if cells.ndim != 2 or cells.shape[0] != len(pairs):
            raise ShapeError("cell_vectors must have one row per pair")
        if cells.shape[1] != self.cell_dim_:
            raise ShapeError(f"expected {self.cell_dim_} cell features, got {cells.shape[1]}")
        cache = {}
        rows = []
        for a, b in pairs:
            for g in (a, b):
                if g not in cache:
                    cache[g] = self.embed(g)
            rows.append(np.concatenate([cache[a], cache[b]]))
        X = np.hstack([np.array(rows), cells])
        return mlp_forward(self.params_[1 + self.config.layers:], X)[0]

    def state(self):
        arrays = {f"p{i}": q for i, q in enumerate(self.params_)}
        arrays["cell_dim"] = np.array([self.cell_dim_], dtype=np.int64)
        return arrays

    def extra_state(self):
        ordered = sorted(self.dictionary_.entries.items(), key=lambda kv: kv[1])
        return {"dictionary": [repr(enc) for enc, _ in ordered]}

    @classmethod
    def from_state(cls, config, arrays, extra=None):
        model = cls(config)
        n_params = 1 + config.layers + 2 * (len(config.head.hidden) + 1)
        model.params_ = [arrays[f"p{i}"] for i in range(n_params)]
        model.cell_dim_ = int(arrays["cell_dim"][0])
        entries = {ast.literal_eval(s): i for i, s in enumerate((extra or {}).get("dictionary", []))}
        model.dictionary_ = SubgraphDictionary(config.radius, config.use_bond_order, entries, frozen=True)
        return model


def fit_gnn(pairs, cell_vectors, y, cfg: GnnConfig) -> GNN:
    return GNN(cfg).fit(pairs, cell_vectors, y)


def extract_gnnr(model: GNN, graph: MolecularGraph) -> np.ndarray:
    return model.embed(graph)
