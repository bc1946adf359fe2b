"""Monte Carlo oracle: effective conductivity of finite periodic tori.

Each sample draws i.i.d. bond conductances on an L^d torus and solves the
corrector problem div(sigma (e + grad phi)) = 0 with a unit mean field e
along one axis, by diagonally preconditioned conjugate gradient on the
weighted graph Laplacian.  The per-sample estimate is the energy form
(1/L^d) sum_b sigma_b (e + grad phi)_b e_b, which equals the mean flux at
the solution and is exact for a uniform medium.  The torus-plus-mean-field
formulation avoids the boundary layers of plate-electrode setups.

Sampling uses the counter-based Philox generator keyed by (seed, sample
index), so results are independent of evaluation order and worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg

from .distributions import DistributionSpec
from .errors import SolverError


@dataclass(frozen=True)
class TorusNetwork:
    """Bond conductances on the periodic L^d lattice.

    conductances has shape (d, L^d): entry (a, x) belongs to the bond from
    site x (C-order flattened) to its +e_a periodic neighbour.
    """

    d: int
    L: int
    conductances: np.ndarray
    seed: int
    sample_index: int = 0


@dataclass(frozen=True)
class CorrectorSolution:
    phi: np.ndarray        # zero-mean potential
    estimate: float        # per-sample effective conductivity
    residual: float        # final relative CG residual
    iterations: int


@dataclass(frozen=True)
class SigmaEstimate:
    """Sample mean and standard error over independent networks."""

    mean: float
    stderr: float
    samples: int
    L: int
    per_sample: tuple[float, ...] | None = None
    skipped: int = 0


def _neighbour_table(d: int, L: int) -> np.ndarray:
    """(d, L^d) flat index of the +e_a neighbour of every site."""
    n = L**d
    coords = np.unravel_index(np.arange(n), (L,) * d)
    nbr = np.empty((d, n), dtype=np.int64)
    for a in range(d):
        shifted = list(coords)
        shifted[a] = (coords[a] + 1) % L
        nbr[a] = np.ravel_multi_index(tuple(shifted), (L,) * d)
    return nbr


def sample_network(
    d: int, L: int, dist: DistributionSpec, seed: int, sample_index: int = 0
) -> TorusNetwork:
    """Draw i.i.d. bond conductances from an atomic law, reproducibly."""
    dist._require_atoms("sample_network")
    if L < 4:
        raise ValueError("torus side must be >= 4")
    if not 0 <= seed < 2**64 or not 0 <= sample_index < 2**64:
        raise ValueError("seed and sample index must fit in uint64")
    key = np.array([seed, sample_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = gen.random((d, L**d))
    cum = np.cumsum(dist.probs())
    cum[-1] = 1.0  # guard the top edge against rounding
    values = dist.values()
    cond = values[np.searchsorted(cum, u, side="right")]
    return TorusNetwork(d=d, L=L, conductances=cond, seed=seed, sample_index=sample_index)


def solve_corrector(
    network: TorusNetwork, direction: int = 1, tol: float = 1e-10
) -> CorrectorSolution:
    """Solve the periodic corrector problem and evaluate the energy estimate.

    The Laplacian is singular with constant nullspace; the right-hand side
    is a discrete divergence, hence consistent, and any solution gives the
    same bond gradients.  Non-convergence raises SolverError with the final
    residual attached.
    """
    d, L = network.d, network.L
    if not 1 <= direction <= d:
        raise ValueError(f"direction must lie in 1..{d}")
    n = L**d
    sig = network.conductances
    nbr = _neighbour_table(d, L)
    sites = np.arange(n)

    rows = np.concatenate([np.concatenate([sites, nbr[a], sites, nbr[a]]) for a in range(d)])
    cols = np.concatenate([np.concatenate([sites, sites, nbr[a], nbr[a]]) for a in range(d)])
    data = np.concatenate([np.concatenate([sig[a], -sig[a], -sig[a], sig[a]]) for a in range(d)])
    A = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    s = sig[direction - 1]
    rhs = -s.copy()
    np.add.at(rhs, nbr[direction - 1], s)
    rhs = -rhs  # rhs[x] = sigma_dir(x) - sigma_dir(x - e_dir)

    diag_inv = 1.0 / A.diagonal()
    precond = LinearOperator((n, n), matvec=lambda x: diag_inv * x)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    phi, info = cg(A, rhs, rtol=tol, atol=0.0, maxiter=100 * L * d, M=precond, callback=count)
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(rhs - A @ phi)) / rhs_norm if rhs_norm > 0 else 0.0
    if info != 0:
        raise SolverError(
            f"conjugate gradient failed to reach rtol={tol} "
            f"after {iterations} iterations (relative residual {residual:.3e})",
            residual=residual,
            iterations=iterations,
        )
    phi = phi - phi.mean()
    grad = phi[nbr[direction - 1]] - phi
    estimate = float(np.mean(s * (1.0 + grad)))
    return CorrectorSolution(phi=phi, estimate=estimate, residual=residual, iterations=iterations)


def estimate_sigma_e(
    d: int,
    L: int,
    dist: DistributionSpec,
    samples: int,
    seed: int,
    tol: float = 1e-10,
    direction: int = 1,
    keep_per_sample: bool = False,
    threads: int = 1,
) -> SigmaEstimate:
    """Mean and standard error of the per-sample estimate over `samples` networks.

    Deterministic for a given seed.  Samples whose solve fails are skipped
    and counted in `skipped`; the estimate is over the remaining ones.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")

    def one(i: int) -> float | None:
        net = sample_network(d, L, dist, seed, sample_index=i)
        try:
            return solve_corrector(net, direction=direction, tol=tol).estimate
        except SolverError:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(one, range(samples)))
    else:
        raw = [one(i) for i in range(samples)]

    vals = np.array([r for r in raw if r is not None])
    skipped = samples - len(vals)
    if len(vals) < 2:
        raise SolverError(f"only {len(vals)} of {samples} samples solved")
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(len(vals)))
    return SigmaEstimate(
        mean=mean,
        stderr=stderr,
        samples=int(len(vals)),
        L=L,
        per_sample=tuple(float(x) for x in vals) if keep_per_sample else None,
        skipped=int(skipped),
    )
