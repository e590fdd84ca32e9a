"""
Two-output coregionalized covariance over heterotopic inputs.

Each latent GP ``q`` enters the outputs through a weight vector ``a_q`` and a
rank-1 coregionalization matrix ``B_q = a_q a_q^T``. For output sample sets
``T_1`` and ``T_2`` (possibly of different sizes and at different times) the
joint covariance has blocks

    C[d, d'] = sum_q B_q[d, d'] K_q(T_d, T_d') + delta(d, d') sigma2_d I

Output index 0 is the sparse optical-like series being gap filled, index 1 the
dense radar-like companion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .errors import NotPositiveDefinite
from .kernel import KernelParams, kernel_matrix

JITTER_LADDER = (1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class CoregVector:
    """Weights ``(a_1q, a_2q)`` of one latent GP in the two outputs.

    ``a`` and ``-a`` give the same coregionalization matrix, so the stored
    vector is canonicalized to have its first nonzero component nonnegative.
    """

    a: tuple

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if a.shape != (2,):
            raise ValueError(f"coregionalization vector must have 2 components, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("coregionalization vector must be finite")
        nz = np.flatnonzero(a)
        if nz.size and a[nz[0]] < 0:
            a = -a
        # -0.0 would leak into serialized output
        a = a + 0.0
        object.__setattr__(self, "a", (float(a[0]), float(a[1])))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.a)

    @property
    def b12(self) -> float:
        return self.a[0] * self.a[1]


def coreg_matrix(v) -> np.ndarray:
    """Rank-1 coregionalization matrix ``a a^T``."""
    a = v.array if isinstance(v, CoregVector) else np.asarray(v, dtype=float)
    return np.outer(a, a)


@dataclass(frozen=True)
class MultiInput:
    """Sample times of the two outputs; each vector strictly ascending."""

    times_per_output: tuple
    stacked: np.ndarray = field(init=False, repr=False, compare=False)
    output_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.times_per_output) != 2:
            raise ValueError("exactly two outputs are supported")
        ts = []
        for d, t in enumerate(self.times_per_output):
            t = np.array(t, dtype=float).reshape(-1)
            if not np.all(np.isfinite(t)):
                raise ValueError(f"output {d + 1} times must be finite")
            if t.size > 1 and np.any(np.diff(t) <= 0):
                raise ValueError(f"output {d + 1} times must be strictly ascending (no duplicates)")
            t.setflags(write=False)
            ts.append(t)
        if ts[0].size + ts[1].size == 0:
            raise ValueError("at least one output must have samples")
        object.__setattr__(self, "times_per_output", tuple(ts))
        stacked = np.concatenate(ts)
        idx = np.concatenate([np.zeros(ts[0].size, dtype=int), np.ones(ts[1].size, dtype=int)])
        stacked.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "stacked", stacked)
        object.__setattr__(self, "output_index", idx)

    @property
    def counts(self) -> tuple:
        return tuple(t.size for t in self.times_per_output)

    @property
    def total(self) -> int:
        return self.stacked.size


@dataclass(frozen=True)
class NoiseVariances:
    sigma2: tuple

    def __post_init__(self):
        s = np.asarray(self.sigma2, dtype=float).reshape(-1)
        if s.shape != (2,) or np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError(f"noise variances must be two finite nonnegative values, got {self.sigma2!r}")
        object.__setattr__(self, "sigma2", (float(s[0]), float(s[1])))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.sigma2)


def _coreg_arrays(coregs: Sequence) -> list:
    return [c.array if isinstance(c, CoregVector) else np.asarray(c, dtype=float) for c in coregs]


def latent_kernel_matrices(kernels: Sequence[KernelParams], inputs: MultiInput) -> list:
    """``K_q`` evaluated on the stacked sample times, one matrix per latent GP."""
    if inputs.total == 0:
        raise ValueError("empty MultiInput")
    return [kernel_matrix(k, inputs.stacked, inputs.stacked) for k in kernels]


def assemble_full_covariance(kernels, coregs, inputs: MultiInput, noise) -> np.ndarray:
    """Joint covariance of the stacked samples ``[T_1; T_2]`` including noise."""
    if len(kernels) != len(coregs):
        raise ValueError("one coregionalization vector per latent kernel is required")
    Ks = latent_kernel_matrices(kernels, inputs)
    idx = inputs.output_index
    C = np.zeros((inputs.total, inputs.total))
    for a, K in zip(_coreg_arrays(coregs), Ks):
        v = a[idx]
        C += np.outer(v, v) * K
    sigma2 = noise.array if isinstance(noise, NoiseVariances) else np.asarray(noise, dtype=float)
    C[np.diag_indices_from(C)] += sigma2[idx]
    return C


def cross_covariance_blocks(kernels, coregs, inputs: MultiInput, times) -> np.ndarray:
    """Noise-free covariance between outputs at query ``times`` and all samples.

    Returns an array of shape ``(2, len(times), N_1 + N_2)``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    idx = inputs.output_index
    out = np.zeros((2, times.size, inputs.total))
    for kp, a in zip(kernels, _coreg_arrays(coregs)):
        Kq = kernel_matrix(kp, times, inputs.stacked)
        w = a[idx]
        for d in range(2):
            out[d] += a[d] * w[None, :] * Kq
    return out


def assemble_cross_covariance(kernels, coregs, inputs: MultiInput, t_star: float) -> np.ndarray:
    """``2 x (N_1 + N_2)`` covariance between both outputs at ``t_star`` and the samples."""
    return cross_covariance_blocks(kernels, coregs, inputs, [float(t_star)])[:, 0, :]


@dataclass(frozen=True)
class Factor:
    """Lower Cholesky factor of ``A + jitter_abs * I``.

    ``jitter`` is the relative level from the ladder (0 when none was needed);
    ``jitter_abs`` the value actually added to the diagonal.
    """

    lower: np.ndarray
    jitter: float = 0.0
    jitter_abs: float = 0.0

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def solve(self, b) -> np.ndarray:
        return la.cho_solve((self.lower, True), b, check_finite=False)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.n))


def stable_factorize(matrix, ladder=JITTER_LADDER) -> Factor:
    """Cholesky factorization with an escalating diagonal jitter fallback.

    The plain matrix is tried first. On failure, ``rel * mean(diag)`` is added
    for each ``rel`` in ``ladder`` until a factorization succeeds.

    Raises
    ------
    NotPositiveDefinite
        If the matrix is still not positive definite at the largest jitter.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] == 0:
        raise ValueError("matrix is empty")
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ValueError("matrix must be symmetric")

    try:
        return Factor(la.cholesky(A, lower=True, check_finite=False))
    except la.LinAlgError:
        pass

    scale = float(np.mean(np.diag(A)))
    if not scale > 0.0:
        scale = 1.0
    di = np.diag_indices_from(A)
    for rel in ladder:
        Aj = A.copy()
        Aj[di] += rel * scale
        try:
            L = la.cholesky(Aj, lower=True, check_finite=False)
        except la.LinAlgError:
            continue
        return Factor(L, jitter=rel, jitter_abs=rel * scale)
    raise NotPositiveDefinite(
        f"matrix not positive definite after jitter {ladder[-1]:g} x mean diagonal; "
        "hyperparameters are likely degenerate"
    )
