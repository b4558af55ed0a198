"""Stochastic block graphs: block probabilities, Bernoulli sampling, full spectra.

Graphs have four equal blocks of n nodes.  Edge probabilities are the
Kronecker product of a 4x4 block matrix with the adjacency matrix of the
complete graph on n nodes.  Because the complete graph has a zero diagonal,
same-indexed nodes of *different* blocks are never connected either; the
product is implemented literally so sampled graphs match the analytic limit
object used downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, ParameterError, ParseError

BLOCK_COUNT = 4


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha must lie strictly inside (0, 0.5), got {alpha!r}")


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BlockProbabilityMatrix:
    """4x4 symmetric matrix of block-to-block connection probabilities."""

    alpha: float
    entries: np.ndarray


@dataclass(frozen=True)
class SbmConfig:
    """Sampling parameters: coupling alpha, nodes per block n, RNG seed."""

    alpha: float
    n: int
    seed: int

    def __post_init__(self):
        _check_alpha(self.alpha)
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ParameterError(f"seed must be a nonnegative integer, got {self.seed!r}")

    @property
    def size(self) -> int:
        return BLOCK_COUNT * self.n


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 adjacency matrix with zero diagonal.

    ``n``, ``alpha`` and ``seed`` record how the graph was sampled and may be
    None for graphs built directly from entries.
    """

    entries: np.ndarray
    n: int | None = None
    alpha: float | None = None
    seed: int | None = None

    def __post_init__(self):
        a = self.entries
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ContractError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ContractError("adjacency diagonal must be zero")
        if not np.isin(a, (0, 1)).all():
            raise ContractError("adjacency entries must be 0 or 1")

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full eigensystem of a symmetric matrix, eigenvalues sorted descending.

    Column k of ``eigenvectors`` belongs to ``eigenvalues[k]``; columns are
    orthonormal and sign-fixed so the largest-magnitude entry is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def adjacency_from_entries(entries) -> AdjacencyMatrix:
    """Wrap a raw 0/1 symmetric matrix, validating the structural invariants."""
    arr = np.asarray(entries, dtype=np.int8)
    return AdjacencyMatrix(entries=_readonly(arr.copy()))


def build_block_probability_matrix(alpha: float) -> BlockProbabilityMatrix:
    """Connection probabilities for the four-block architecture.

    Intra-block density is 1 - 2*alpha; blocks 1-2, 1-3, 2-4 and 3-4 couple
    with density alpha; blocks 1 and 4 are disconnected.  Every row sums to 1.
    """
    _check_alpha(alpha)
    a = float(alpha)
    d = 1.0 - 2.0 * a
    entries = np.array(
        [
            [d, a, a, 0.0],
            [a, d, 0.0, a],
            [a, 0.0, d, a],
            [0.0, a, a, d],
        ]
    )
    return BlockProbabilityMatrix(alpha=a, entries=_readonly(entries))


def block_eigenvector_matrix() -> np.ndarray:
    """The alpha-independent orthonormal eigenvectors of the block matrix as
    columns: the flat vector, the block-2-minus-3 and block-1-minus-4
    contrasts, and the (+, -, -, +) pattern."""
    s = 1.0 / np.sqrt(2.0)
    vecs = np.array(
        [
            [0.5, 0.0, s, 0.5],
            [0.5, s, 0.0, -0.5],
            [0.5, -s, 0.0, -0.5],
            [0.5, 0.0, -s, 0.5],
        ]
    )
    return _readonly(vecs)


def analytic_block_eigenpairs(alpha: float) -> list[tuple[float, np.ndarray]]:
    """Closed-form eigenpairs of the block probability matrix.

    Returns four (eigenvalue, unit eigenvector) pairs in fixed order: 1 with
    the flat vector, the double eigenvalue 1 - 2*alpha spanned by the
    block-2-minus-3 and block-1-minus-4 contrasts, and 1 - 4*alpha with the
    (+, -, -, +) block pattern.  The vectors are pairwise orthonormal.
    """
    _check_alpha(alpha)
    vecs = block_eigenvector_matrix()
    values = [1.0, 1.0 - 2.0 * alpha, 1.0 - 2.0 * alpha, 1.0 - 4.0 * alpha]
    return [(lam, _readonly(vecs[:, k].copy())) for k, lam in enumerate(values)]


def block_membership(n: int) -> np.ndarray:
    """Block id (1..4) of every node for blocks of n nodes in index order."""
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    return _readonly(np.repeat(np.arange(1, BLOCK_COUNT + 1), n))


def edge_probability_matrix(config: SbmConfig) -> np.ndarray:
    """Bernoulli parameter for every node pair: block matrix (x) complete graph."""
    c = build_block_probability_matrix(config.alpha).entries
    k = np.ones((config.n, config.n)) - np.eye(config.n)
    return np.kron(c, k)


def sample_adjacency(config: SbmConfig) -> AdjacencyMatrix:
    """Draw one graph: independent Bernoulli edges on the upper triangle,
    mirrored down.  Deterministic for a given config seed."""
    probs = edge_probability_matrix(config)
    size = config.size
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    iu = np.triu_indices(size, k=1)
    edges = rng.random(iu[0].size) < probs[iu]
    entries = np.zeros((size, size), dtype=np.int8)
    entries[iu] = edges
    entries += entries.T
    return AdjacencyMatrix(
        entries=_readonly(entries), n=config.n, alpha=config.alpha, seed=config.seed
    )


def eigendecompose(adjacency) -> SpectralDecomposition:
    """Dense symmetric eigendecomposition, eigenvalues descending.

    Accepts an AdjacencyMatrix or any real symmetric matrix.  Eigenvector
    signs are fixed so each column's largest-magnitude entry is positive,
    making the output deterministic up to degenerate subspaces.
    """
    if isinstance(adjacency, AdjacencyMatrix):
        mat = adjacency.entries.astype(float)
    else:
        mat = np.asarray(adjacency, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ContractError(f"expected a square matrix, got shape {mat.shape}")
        if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12):
            raise ContractError("matrix must be symmetric")
    w, v = np.linalg.eigh(mat)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    v *= signs
    return SpectralDecomposition(eigenvalues=_readonly(w), eigenvectors=_readonly(v))


def top_eigenvalue_deviation(alpha: float, n: int, seeds) -> float:
    """Convergence diagnostic: mean absolute gap between the top-4 eigenvalues
    of A / size and their limit values {1, 1-2a, 1-2a, 1-4a} / 4, averaged over
    the given seeds.  Positions 2 and 3 share a limit value, so their internal
    order does not matter."""
    targets = np.array([lam / BLOCK_COUNT for lam, _ in analytic_block_eigenpairs(alpha)])
    devs = []
    for seed in seeds:
        adj = sample_adjacency(SbmConfig(alpha=alpha, n=n, seed=seed))
        dec = eigendecompose(adj)
        top = dec.eigenvalues[:BLOCK_COUNT] / adj.size
        devs.append(np.mean(np.abs(top - targets)))
    return float(np.mean(devs))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_edge_list(adjacency: AdjacencyMatrix, path) -> None:
    """Plain-text edge list, one "u v" pair per line (0-based, upper triangle),
    preceded by a header recording size and sampling metadata."""
    alpha = "none" if adjacency.alpha is None else _fmt(adjacency.alpha)
    seed = "none" if adjacency.seed is None else str(adjacency.seed)
    u, v = np.nonzero(np.triu(adjacency.entries, k=1))
    lines = [f"# nodes={adjacency.size} alpha={alpha} seed={seed}"]
    lines.extend(f"{int(a)} {int(b)}" for a, b in zip(u, v))
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path) -> AdjacencyMatrix:
    """Inverse of :func:`write_edge_list`."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: missing header line")
    fields = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
    try:
        size = int(fields["nodes"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from exc
    alpha = None if fields.get("alpha", "none") == "none" else float(fields["alpha"])
    seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
    entries = np.zeros((size, size), dtype=np.int8)
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            a, b = (int(tok) for tok in line.split())
        except ValueError as exc:
            raise ParseError(f"{path}: line {ln}: expected 'u v', got {line!r}") from exc
        if not (0 <= a < size and 0 <= b < size):
            raise ParseError(f"{path}: line {ln}: node index out of range")
        entries[a, b] = entries[b, a] = 1
    n = size // BLOCK_COUNT if size % BLOCK_COUNT == 0 else None
    return AdjacencyMatrix(entries=_readonly(entries), n=n, alpha=alpha, seed=seed)


def write_spectra(decomposition: SpectralDecomposition, values_path, vectors_path) -> None:
    """Eigenvalues as index,eigenvalue CSV; eigenvector matrix (nodes x modes,
    columns aligned with the eigenvalue indices) in a sidecar CSV."""
    vals = ["index,eigenvalue"]
    vals.extend(f"{i},{_fmt(w)}" for i, w in enumerate(decomposition.eigenvalues))
    Path(values_path).write_text("\n".join(vals) + "\n")
    rows = [",".join(_fmt(x) for x in row) for row in decomposition.eigenvectors]
    Path(vectors_path).write_text("\n".join(rows) + "\n")
