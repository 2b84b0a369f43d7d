"""Harmonic-function baseline: labeled rows fixed, unlabeled rows solved.

Solves the combinatorial-Laplacian system (D_uu - W_uu) f_u = W_ul f_l, i.e.
every unlabeled node takes the weight-averaged value of its neighbors.  The
system is symmetric positive definite as long as every connected component
contains at least one labeled node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .diffusion import LabelState
from .errors import ShapeError, UnlabeledComponentError
from .graph import Graph

# systems smaller than this are solved densely; larger ones iteratively
DENSE_SOLVE_LIMIT = 200
CG_TOLERANCE = 1e-10


@dataclass
class HarmonicSolution:
    """n x c values: labeled rows passed through, unlabeled rows harmonic."""

    f: np.ndarray
    labeled_mask: np.ndarray


def grf_harmonic(graph: Graph, state: LabelState) -> HarmonicSolution:
    """Harmonic interpolation of the labeled one-hot rows over the graph."""
    f = np.asarray(state.f, dtype=np.float64)
    mask = np.asarray(state.labeled_mask, dtype=bool)
    if f.shape[0] != graph.n or mask.shape != (graph.n,):
        raise ShapeError(
            f"label state shape {f.shape} does not match graph n={graph.n}"
        )
    if mask.all():
        return HarmonicSolution(f.copy(), mask.copy())

    _, comp = connected_components(graph.weights, directed=False)
    for cid in range(comp.max() + 1):
        members = np.nonzero(comp == cid)[0]
        if not mask[members].any():
            raise UnlabeledComponentError(members)

    u = np.nonzero(~mask)[0]
    l = np.nonzero(mask)[0]
    W = sp.csr_matrix(graph.weights)
    Wuu = W[u][:, u]
    Wul = W[u][:, l]
    # full degrees (labeled neighbors included) on the diagonal
    deg_u = graph.degrees[u]
    b = Wul @ f[l]
    A = sp.diags(deg_u) - Wuu

    if len(u) < DENSE_SOLVE_LIMIT:
        fu = np.linalg.solve(A.toarray(), b)
    else:
        # symmetric Jacobi scaling keeps the residual criterion meaningful
        # for nodes whose degrees differ by many orders of magnitude
        s = 1.0 / np.sqrt(deg_u)
        S = sp.diags(s)
        As = (S @ A @ S).tocsr()
        fu = np.empty_like(b)
        for col in range(b.shape[1]):
            y, info = cg(As, s * b[:, col], rtol=0.0, atol=CG_TOLERANCE, maxiter=20 * len(u))
            if info != 0:
                # SPD by construction; fall back to a direct solve if CG stalls
                fu[:, col] = np.linalg.solve(A.toarray(), b[:, col])
            else:
                fu[:, col] = s * y

    out = f.copy()
    out[u] = fu
    return HarmonicSolution(out, mask.copy())
