"""Discretization of the periodic strip (S^1/ε) × ℝ.

The strip is periodic in x₁ with period 2π/ε and truncated at |x₂| = R with
homogeneous Dirichlet conditions.  All the fields of interest are even in
x₂, so only the half-strip x₂ > 0 is stored: transverse nodes sit at the
cell centers (j + ½)h₂ and the mirror condition at x₂ = 0 is built into the
stencil.  This keeps the operator symmetric and removes the spurious
x₂-translation mode that a full grid would carry.

Integrals and inner products use the matching trapezoidal-type quadrature
(weight h₁·2h₂ per stored node, the factor 2 accounting for the mirror
half), so that the discrete H¹ product coincides exactly with the quadratic
form of the −Δ+1 matrix.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg


@dataclass(frozen=True)
class StripGrid:
    """Tensor grid on the half-strip [−π/ε, π/ε) × (0, R)."""

    epsilon: float
    transverse_extent: float
    nodes_x1: int
    nodes_xp: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.transverse_extent <= 0:
            raise ValueError("transverse_extent must be positive")
        if self.nodes_x1 < 4 or self.nodes_xp < 2:
            raise ValueError("grid too coarse")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.epsilon

    @property
    def h1(self) -> float:
        return self.period / self.nodes_x1

    @property
    def h2(self) -> float:
        return self.transverse_extent / (self.nodes_xp + 0.5)

    @property
    def weight(self) -> float:
        """Quadrature weight of one stored node (full-strip integral)."""
        return self.h1 * 2 * self.h2

    @cached_property
    def x1(self) -> np.ndarray:
        return -np.pi / self.epsilon + self.h1 * np.arange(self.nodes_x1)

    @cached_property
    def x2(self) -> np.ndarray:
        return self.h2 * (np.arange(self.nodes_xp) + 0.5)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nodes_x1, self.nodes_xp)

    @property
    def size(self) -> int:
        return self.nodes_x1 * self.nodes_xp

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def wrap_x1(self, x):
        """Reduce x₁ offsets to the fundamental interval [−π/ε, π/ε)."""
        half = np.pi / self.epsilon
        return (np.asarray(x) + half) % self.period - half

    def refined(self) -> "StripGrid":
        """Grid with both mesh widths exactly halved."""
        return StripGrid(
            epsilon=self.epsilon,
            transverse_extent=self.transverse_extent,
            nodes_x1=2 * self.nodes_x1,
            nodes_xp=2 * self.nodes_xp + 1,
        )

    @cached_property
    def laplacian_x1(self) -> sp.csr_matrix:
        n, h = self.nodes_x1, self.h1
        main = np.full(n, 2.0 / h**2)
        off = np.full(n - 1, -1.0 / h**2)
        A = sp.diags([off, main, off], (-1, 0, 1), format="lil")
        A[0, n - 1] = A[n - 1, 0] = -1.0 / h**2
        return A.tocsr()

    @cached_property
    def laplacian_xp(self) -> sp.csr_matrix:
        n, h = self.nodes_xp, self.h2
        main = np.full(n, 2.0 / h**2)
        # mirror at x2 = 0: the ghost node equals the first stored node
        main[0] = 1.0 / h**2
        off = np.full(n - 1, -1.0 / h**2)
        return sp.diags([off, main, off], (-1, 0, 1), format="csr")

    @cached_property
    def helmholtz_matrix(self) -> sp.csr_matrix:
        """Sparse −Δ+1 on fields flattened in C order (x₁ major)."""
        I1 = sp.identity(self.nodes_x1, format="csr")
        I2 = sp.identity(self.nodes_xp, format="csr")
        A = sp.kron(self.laplacian_x1, I2) + sp.kron(I1, self.laplacian_xp)
        return (A + sp.identity(self.size)).tocsr()


@dataclass
class GridField:
    """Scalar field sampled on a :class:`StripGrid` (shape n₁ × n₂)."""

    grid: StripGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape:
            raise ValueError(
                f"data shape {self.data.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "GridField":
        return GridField(self.grid, self.data.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return GridField(self.grid, self.data + other.data)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return GridField(self.grid, self.data - other.data)

    def __mul__(self, scalar):
        return GridField(self.grid, self.data * float(scalar))

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.data)))

    def to_bytes(self) -> bytes:
        header = {
            "epsilon": self.grid.epsilon,
            "transverse_extent": self.grid.transverse_extent,
            "nodes_x1": self.grid.nodes_x1,
            "nodes_xp": self.grid.nodes_xp,
            "dtype": "float64",
        }
        return json.dumps(header).encode() + b"\n" + self.data.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "GridField":
        head, _, raw = blob.partition(b"\n")
        meta = json.loads(head)
        grid = StripGrid(
            epsilon=meta["epsilon"],
            transverse_extent=meta["transverse_extent"],
            nodes_x1=meta["nodes_x1"],
            nodes_xp=meta["nodes_xp"],
        )
        data = np.frombuffer(raw, dtype="<f8").reshape(grid.shape)
        return cls(grid, data.copy())

    def to_csv(self, fh) -> None:
        """x1,x2,value rows for plotting."""
        close = False
        if isinstance(fh, str):
            fh, close = open(fh, "w"), True
        try:
            fh.write("x1,x2,value\n")
            for i, x1 in enumerate(self.grid.x1):
                for j, x2 in enumerate(self.grid.x2):
                    fh.write(f"{x1:.17g},{x2:.17g},{self.data[i, j]:.17g}\n")
        finally:
            if close:
                fh.close()


def _check_same_grid(u: GridField, w: GridField) -> None:
    if u.grid is not w.grid and u.grid != w.grid:
        raise ValueError("fields live on different grids")


def apply_helmholtz(u: GridField) -> GridField:
    """(−Δ+1)u with the 5-point stencil (periodic x₁, mirror/Dirichlet x₂)."""
    A = u.grid.helmholtz_matrix
    return GridField(u.grid, (A @ u.data.ravel()).reshape(u.grid.shape))


def solve_helmholtz(rhs: GridField, tol: float = 1e-10, maxiter: int = 20000) -> GridField:
    """Solve (−Δ+1)u = rhs by diagonally preconditioned conjugate gradients.

    Raises
    ------
    RuntimeError
        If the iteration cap is hit; the message reports the achieved
        relative residual.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = rhs.grid.helmholtz_matrix
    b = rhs.data.ravel()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return GridField(rhs.grid, np.zeros(rhs.grid.shape))
    M = sp.diags(1.0 / A.diagonal())
    x, info = cg(A, b, rtol=0.1 * tol, atol=0.0, maxiter=maxiter, M=M)
    rel = np.linalg.norm(A @ x - b) / bnorm
    if info != 0 or rel >= tol:
        raise RuntimeError(
            f"Helmholtz solve stalled: relative residual {rel:.3e} after cap"
        )
    return GridField(rhs.grid, x.reshape(rhs.grid.shape))


def inner_products(u: GridField, w: GridField) -> tuple[float, float]:
    """(L², H¹) inner products by the grid quadrature.

    The H¹ product is evaluated through the operator quadratic form
    ⟨(−Δ+1)u, w⟩, which equals ⟨∇u,∇w⟩ + ⟨u,w⟩ exactly after discrete
    summation by parts, keeping the products consistent with the stencil.
    """
    _check_same_grid(u, w)
    wgt = u.grid.weight
    l2 = wgt * float(u.data.ravel() @ w.data.ravel())
    h1 = wgt * float((u.grid.helmholtz_matrix @ u.data.ravel()) @ w.data.ravel())
    return l2, h1


def l2_norm(u: GridField) -> float:
    return float(np.sqrt(max(inner_products(u, u)[0], 0.0)))


def h1_norm(u: GridField) -> float:
    return float(np.sqrt(max(inner_products(u, u)[1], 0.0)))


def gradient_magnitude(u: GridField) -> np.ndarray:
    """Centered-difference |∇u| per node (mirror at x₂=0, Dirichlet at R)."""
    d = u.data
    g1 = (np.roll(d, -1, axis=0) - np.roll(d, 1, axis=0)) / (2 * u.grid.h1)
    padded = np.concatenate([d[:, :1], d, np.zeros((d.shape[0], 1))], axis=1)
    g2 = (padded[:, 2:] - padded[:, :-2]) / (2 * u.grid.h2)
    return np.sqrt(g1**2 + g2**2)


def gradient_sup(u: GridField) -> float:
    """Sup norm of the centered-difference gradient magnitude."""
    return float(np.max(gradient_magnitude(u)))


def shift_x1(u: GridField, tau: float) -> GridField:
    """Translate the field by τ in x₁ (trigonometric interpolation)."""
    n = u.grid.nodes_x1
    k = np.fft.rfftfreq(n, d=u.grid.h1) * 2 * np.pi
    spec = np.fft.rfft(u.data, axis=0)
    shifted = np.fft.irfft(spec * np.exp(-1j * k[:, None] * tau), n=n, axis=0)
    return GridField(u.grid, shifted)


def reflect_x1(u: GridField, center: float) -> GridField:
    """Reflect the field about x₁ = center (trigonometric interpolation)."""
    n = u.grid.nodes_x1
    k = np.fft.rfftfreq(n, d=u.grid.h1) * 2 * np.pi
    spec = np.fft.rfft(u.data, axis=0)
    # u(2c − x) has coefficients conj(û_k)·e^{−2ik(c − x_left)} relative to
    # the grid origin at x1[0]
    x0 = u.grid.x1[0]
    phase = np.exp(-2j * k[:, None] * (center - x0))
    reflected = np.fft.irfft(np.conj(spec) * phase, n=n, axis=0)
    return GridField(u.grid, reflected)


def align_shift(u: GridField, ref: GridField) -> float:
    """Shift τ maximizing correlation of u(·−τ) with ref along x₁.

    Coarse search by FFT cross-correlation, refined by quadratic
    interpolation of the correlation peak.
    """
    _check_same_grid(u, ref)
    a = np.fft.rfft(u.data, axis=0)
    b = np.fft.rfft(ref.data, axis=0)
    corr = np.fft.irfft((np.conj(a) * b).sum(axis=1), n=u.grid.nodes_x1)
    j = int(np.argmax(corr))
    n = u.grid.nodes_x1
    cm, c0, cp = corr[(j - 1) % n], corr[j], corr[(j + 1) % n]
    denom = cm - 2 * c0 + cp
    frac = 0.5 * (cm - cp) / denom if denom != 0 else 0.0
    tau = u.grid.h1 * (j + frac)
    half = 0.5 * u.grid.period
    return float((tau + half) % u.grid.period - half)
