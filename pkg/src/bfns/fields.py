"""Spectral velocity fields on the periodic torus [0, 2*pi)^d, d in {2, 3}.

A field is represented by its Fourier coefficients u_hat(k) on the full
centered cube k in [-K, K]^d under the analysis convention

    u(x) = sum_k u_hat(k) exp(i k . x),

so the Stokes eigenfunctions are the Fourier modes themselves with
eigenvalues |k|^2 and lambda_1 = 1 on mean-free fields.  Three invariants
are maintained by every operation that returns a field:

  * mean-free:   u_hat(0) = 0,
  * reality:     u_hat(-k) = conj(u_hat(k)),
  * solenoidal:  k . u_hat(k) = 0, exactly, in IEEE double arithmetic.

Exactness of the divergence is achieved by writing each projected mode as
an integer combination of integer basis vectors orthogonal to k, with the
basis coefficients snapped to a per-mode fixed-point lattice (a power of
two grid).  All products and sums appearing in k . u_hat(k) then stay on
that lattice and cancel without rounding.  The snap costs about 1e-13
relative precision per projection, far below the truncation error of any
run at the resolutions used here.

Nonlinear terms are evaluated pseudo-spectrally on an M^d collocation grid.
The default M = 4K removes aliasing from quadratic products entirely and
from cubic products up to the extreme corner modes; quadrature of triple
products of retained modes is exact for M > 3K, which makes the trilinear
form's skew symmetry hold to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .errors import InvalidFieldError, ParameterError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# grid machinery
# ---------------------------------------------------------------------------


class GridSpec:
    """Precomputed wavenumber arrays and embedding indices for one (d, K, M)."""

    def __init__(self, d, K, M):
        if d not in (2, 3):
            raise ParameterError(f"dimension must be 2 or 3, got {d}")
        if K < 1:
            raise ParameterError(f"need K >= 1, got {K}")
        if M < 2 * K + 1:
            raise ParameterError(f"grid M={M} cannot hold modes up to K={K}")
        self.d = d
        self.K = K
        self.M = M
        self.n = 2 * K + 1
        kax = np.arange(-K, K + 1, dtype=np.int64)
        shape = (self.n,) * d
        self.kvec = []
        for j in range(d):
            sh = [1] * d
            sh[j] = self.n
            self.kvec.append(np.broadcast_to(kax.reshape(sh), shape))
        self.ksq_int = sum(kj * kj for kj in self.kvec)
        self.ksq = self.ksq_int.astype(np.float64)
        self.center = (K,) * d
        # embedding of the centered cube into the M^d FFT index space
        wrap = np.mod(kax, M)
        self.embed_ix = np.ix_(*([wrap] * d))
        self.cell_volume = (TWO_PI / M) ** d
        # fixed-point snap width for the exact-divergence projector
        self.snap_bits = 52 - int(math.ceil(math.log2(2.0 * d * K * K)))


@lru_cache(maxsize=None)
def get_grid(d, K, M=None):
    if M is None:
        M = 4 * K
    return GridSpec(d, K, M)


# ---------------------------------------------------------------------------
# the field type
# ---------------------------------------------------------------------------


@dataclass
class SpectralField:
    """Fourier coefficients of a velocity field on the full cube [-K, K]^d.

    coeffs has shape (d, 2K+1, ..., 2K+1) with axis index i mapping to the
    wavenumber component k = i - K.
    """

    d: int
    K: int
    coeffs: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        shape = (self.d,) + (2 * self.K + 1,) * self.d
        if not isinstance(self.coeffs, np.ndarray) or self.coeffs.shape != shape:
            raise InvalidFieldError(
                f"coefficient array must have shape {shape}, got "
                f"{getattr(self.coeffs, 'shape', None)}"
            )
        if self.coeffs.dtype != np.complex128:
            raise InvalidFieldError(f"coefficients must be complex128, got {self.coeffs.dtype}")

    def copy(self):
        return SpectralField(self.d, self.K, self.coeffs.copy())

    @classmethod
    def zeros(cls, d, K):
        return cls(d, K, np.zeros((d,) + (2 * K + 1,) * d, dtype=np.complex128))

    @classmethod
    def from_modes(cls, d, K, entries):
        """Build a solenoidal field from (k, component, re, im) entries.

        Each entry sets u_hat(k)[component] += re + i*im; the conjugate mode
        at -k is filled in automatically, and the result is projected, so the
        returned field satisfies all invariants.
        """
        f = cls.zeros(d, K)
        for entry in entries:
            k = tuple(int(x) for x in entry["k"])
            if len(k) != d or any(abs(x) > K for x in k):
                raise ParameterError(f"mode {k} outside the retained cube for K={K}")
            comp = int(entry["component"])
            if not 0 <= comp < d:
                raise ParameterError(f"component {comp} out of range for d={d}")
            val = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            idx = tuple(x + K for x in k)
            f.coeffs[(comp,) + idx] += val
            if any(x != 0 for x in k):
                midx = tuple(-x + K for x in k)
                f.coeffs[(comp,) + midx] += val.conjugate()
        return leray_project(f)


def fields_equal(a, b):
    """Bitwise equality of two fields."""
    return a.d == b.d and a.K == b.K and np.array_equal(a.coeffs, b.coeffs)


def validate_field(f):
    """Raise InvalidFieldError if the field is structurally unusable."""
    if not isinstance(f, SpectralField):
        raise InvalidFieldError(f"expected SpectralField, got {type(f)!r}")
    if not np.all(np.isfinite(f.coeffs.view(np.float64))):
        raise InvalidFieldError("field has non-finite coefficients")
    return f


def invariant_report(f):
    """Measure the three field invariants.

    Returns a dict with the exact mean-mode and divergence status plus the
    worst reality mismatch, for use by validation layers and tests.
    """
    g = get_grid(f.d, f.K, 2 * f.K + 1)
    c = f.coeffs
    div = sum(g.kvec[j] * c[j] for j in range(f.d))
    rev = (slice(None),) + (slice(None, None, -1),) * f.d
    mismatch = np.abs(c - np.conj(c[rev]))
    scale = float(np.max(np.abs(c))) or 1.0
    return {
        "mean_free": bool(np.all(c[(slice(None),) + g.center] == 0)),
        "max_divergence": float(np.max(np.abs(div))),
        "solenoidal_exact": bool(np.all(div == 0)),
        "reality_rel_mismatch": float(np.max(mismatch)) / scale,
    }


# ---------------------------------------------------------------------------
# Leray projection with exact discrete solenoidality
# ---------------------------------------------------------------------------


def _snap_common(parts, grid):
    """Snap complex arrays to a shared per-mode power-of-two lattice.

    The lattice spacing is chosen from the largest magnitude among all real
    and imaginary parts, leaving enough mantissa headroom that subsequent
    integer-coefficient combinations (|factors| <= K, sums of up to d terms)
    are exact.
    """
    m = np.zeros(parts[0].shape, dtype=np.float64)
    for p in parts:
        np.maximum(m, np.abs(p.real), out=m)
        np.maximum(m, np.abs(p.imag), out=m)
    _, expo = np.frexp(m)
    # keep the lattice spacing a normal float even for subnormal modes
    scale = np.ldexp(1.0, np.maximum(expo - grid.snap_bits, -1022))
    scale = np.where(m == 0.0, 1.0, scale)
    out = []
    for p in parts:
        out.append(np.round(p.real / scale) * scale + 1j * (np.round(p.imag / scale) * scale))
    return out


def _project_coeffs(c, d, K):
    """Project a coefficient array (leading batch axes allowed) onto the
    mean-free solenoidal subspace.

    Modes whose divergence is already exactly zero are passed through
    bitwise, which makes the projector idempotent and the identity on
    already-solenoidal fields.
    """
    g = get_grid(d, K, 2 * K + 1)
    comp_axis = c.ndim - d - 1
    c = c.copy()
    center = (Ellipsis, slice(None)) + g.center
    c[center] = 0.0

    div = sum(g.kvec[j] * c[(Ellipsis, j) + (slice(None),) * d] for j in range(d))
    fix = (div.real != 0.0) | (div.imag != 0.0)
    if not fix.any():
        return c

    kv = g.kvec
    if d == 2:
        k1, k2 = kv
        ksq = np.where(g.ksq_int == 0, 1, g.ksq_int).astype(np.float64)
        u0 = c[(Ellipsis, 0) + (slice(None),) * d]
        u1 = c[(Ellipsis, 1) + (slice(None),) * d]
        cc = (-k2 * u0 + k1 * u1) / ksq
        (ccq,) = _snap_common([cc], g)
        proj = np.stack([-k2 * ccq, k1 * ccq], axis=comp_axis)
    else:
        k1, k2, k3 = kv
        zero = np.zeros_like(k1)
        one = np.ones_like(k1)
        m12 = (k1 != 0) | (k2 != 0)
        mk1 = k1 != 0
        mk2 = k2 != 0
        e1 = [np.where(m12, -k2, one), np.where(m12, k1, zero), zero]
        e2 = [
            np.where(mk1, -k3, zero),
            np.where(mk1, zero, np.where(mk2, -k3, one)),
            np.where(mk1, k1, np.where(mk2, k2, zero)),
        ]
        g11 = sum(e * e for e in e1).astype(np.float64)
        g22 = sum(e * e for e in e2).astype(np.float64)
        g12 = sum(a * b for a, b in zip(e1, e2)).astype(np.float64)
        det = g11 * g22 - g12 * g12
        comps = [c[(Ellipsis, j) + (slice(None),) * d] for j in range(3)]
        b1 = sum(e1[j] * comps[j] for j in range(3))
        b2 = sum(e2[j] * comps[j] for j in range(3))
        c1 = (g22 * b1 - g12 * b2) / det
        c2 = (g11 * b2 - g12 * b1) / det
        c1q, c2q = _snap_common([c1, c2], g)
        proj = np.stack([e1[j] * c1q + e2[j] * c2q for j in range(3)], axis=comp_axis)

    fixb = np.expand_dims(fix, comp_axis)
    return np.where(fixb, proj, c)


def leray_project(f):
    """Orthogonal projection onto mean-free, divergence-free fields.

    Gradient directions k (k . u_hat)/|k|^2 are removed mode by mode and the
    mean mode is zeroed.  The returned coefficients satisfy k . u_hat(k) = 0
    exactly; see the module docstring for how.
    """
    validate_field(f)
    return SpectralField(f.d, f.K, _project_coeffs(f.coeffs, f.d, f.K))


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _to_grid_complex(coeffs, d, K, M):
    g = get_grid(d, K, M)
    lead = coeffs.shape[:-d]
    A = np.zeros(lead + (M,) * d, dtype=np.complex128)
    A[(Ellipsis,) + g.embed_ix] = coeffs
    axes = tuple(range(-d, 0))
    return np.fft.ifftn(A, axes=axes) * float(M) ** d


def to_physical(f, M=None):
    """Collocation samples of the field on the M^d grid (real array, shape (d, M, ..., M))."""
    if M is None:
        M = 4 * f.K
    return _to_grid_complex(f.coeffs, f.d, f.K, M).real


def physical_imag_residue(f, M=None):
    """Relative magnitude of the imaginary part left by the inverse transform.

    Zero for exactly real fields; tiny rounding residue otherwise.  Used to
    audit the reality invariant.
    """
    if M is None:
        M = 4 * f.K
    u = _to_grid_complex(f.coeffs, f.d, f.K, M)
    scale = float(np.max(np.abs(u))) or 1.0
    return float(np.max(np.abs(u.imag))) / scale


def _from_grid(values, d, K, M):
    """Transform grid samples back to the centered cube, with exact
    Hermitian symmetrization so the reality invariant is preserved bitwise
    under conjugate reflection."""
    g = get_grid(d, K, M)
    axes = tuple(range(-d, 0))
    A = np.fft.fftn(values, axes=axes) / float(M) ** d
    c = A[(Ellipsis,) + g.embed_ix]
    rev = (Ellipsis,) + (slice(None, None, -1),) * d
    return 0.5 * (c + np.conj(c[rev]))


def grid_quadrature(values, d, M):
    """Integral of grid samples over the torus, (2*pi/M)^d * sum."""
    return float(np.sum(values)) * (TWO_PI / M) ** d


# ---------------------------------------------------------------------------
# norms and inner products
# ---------------------------------------------------------------------------


def h_norm_sq(f):
    """|u|^2 = (2*pi)^d * sum |u_hat|^2 (L^2 norm squared, Parseval)."""
    c = f.coeffs
    return float(TWO_PI ** f.d * np.sum(c.real * c.real + c.imag * c.imag))


def h_norm(f):
    return math.sqrt(h_norm_sq(f))


def v_norm_sq(f):
    """||u||^2 = (2*pi)^d * sum |k|^2 |u_hat|^2 (H^1 seminorm squared; a norm
    on mean-free fields since lambda_1 = 1)."""
    g = get_grid(f.d, f.K, 2 * f.K + 1)
    c = f.coeffs
    mag = c.real * c.real + c.imag * c.imag
    return float(TWO_PI ** f.d * np.sum(g.ksq * mag))


def v_norm(f):
    return math.sqrt(v_norm_sq(f))


def h_inner(a, b):
    """L^2 inner product (a, b) = (2*pi)^d * sum Re(conj(a_hat) b_hat)."""
    if a.d != b.d or a.K != b.K:
        raise ParameterError("inner product requires fields on the same mode cube")
    return float(TWO_PI ** a.d * np.sum((np.conj(a.coeffs) * b.coeffs).real))


def lp_norm(f, p, M=None):
    """|u|_p by collocation quadrature: ((2*pi/M)^d sum |u(x)|^p)^(1/p).

    |u(x)| is the Euclidean magnitude of the velocity vector.  The default
    grid M = 4K matches the one used by the nonlinear terms, which makes the
    damping work term in the energy ledger an exact discrete identity.
    """
    if p < 1:
        raise ParameterError(f"need p >= 1, got {p}")
    if M is None:
        M = 4 * f.K
    u = to_physical(f, M)
    mag_sq = np.sum(u * u, axis=0)
    return grid_quadrature(mag_sq ** (p / 2.0), f.d, M) ** (1.0 / p)


def norm(f, kind, p=None, M=None):
    """Dispatch on norm kind: "H" (L^2), "V" (H^1), or "Lp" with exponent p."""
    if kind == "H":
        return h_norm(f)
    if kind == "V":
        return v_norm(f)
    if kind == "Lp":
        if p is None:
            raise ParameterError("Lp norm needs an exponent p")
        return lp_norm(f, p, M)
    raise ParameterError(f"unknown norm kind {kind!r}")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def stokes_apply(f):
    """Stokes operator (A u)_hat(k) = |k|^2 u_hat(k), reprojected."""
    validate_field(f)
    g = get_grid(f.d, f.K, 2 * f.K + 1)
    return SpectralField(f.d, f.K, _project_coeffs(g.ksq * f.coeffs, f.d, f.K))


def _gradients_physical(f, M):
    """Collocation samples of all partials: result[i, j] = d u_j / d x_i."""
    g = get_grid(f.d, f.K, 2 * f.K + 1)
    d = f.d
    stack = np.empty((d, d) + (2 * f.K + 1,) * d, dtype=np.complex128)
    for i in range(d):
        stack[i] = (1j * g.kvec[i]) * f.coeffs
    return _to_grid_complex(stack, d, f.K, M).real


def trilinear_b(u, v, w, M=None):
    """Trilinear advection form b(u, v, w) = sum_ij int u_i (d v_j/d x_i) w_j dx.

    Evaluated by collocation products and quadrature on the M^d grid.  For
    M > 3K the quadrature of the triple product is exact, so skew symmetry
    b(u, v, v) = 0 holds to rounding for solenoidal u.
    """
    if not (u.d == v.d == w.d and u.K == v.K == w.K):
        raise ParameterError("trilinear form requires fields on the same mode cube")
    if M is None:
        M = 4 * u.K
    ug = to_physical(u, M)
    wg = to_physical(w, M)
    dv = _gradients_physical(v, M)
    integrand = np.einsum("i...,ij...,j...->...", ug, dv, wg)
    return grid_quadrature(integrand, u.d, M)


def advection(u, M=None):
    """P_K P (u . grad) u: the truncated, projected advection term."""
    validate_field(u)
    if M is None:
        M = 4 * u.K
    ug = to_physical(u, M)
    du = _gradients_physical(u, M)
    a = np.einsum("i...,ij...->j...", ug, du)
    c = _from_grid(a, u.d, u.K, M)
    return SpectralField(u.d, u.K, _project_coeffs(c, u.d, u.K))


def damping_term(u, beta, alpha, M=None):
    """G(u) = alpha * P_K P (|u|^(beta-1) u), evaluated pointwise on the grid.

    beta = 1 short-circuits to alpha * u without a grid round trip (the
    pointwise factor is identically one).
    """
    validate_field(u)
    if beta < 1:
        raise ParameterError(f"need beta >= 1, got {beta}")
    if alpha < 0:
        raise ParameterError(f"need alpha >= 0, got {alpha}")
    if beta == 1:
        return SpectralField(u.d, u.K, _project_coeffs(alpha * u.coeffs, u.d, u.K))
    if M is None:
        M = 4 * u.K
    ug = to_physical(u, M)
    mag = np.sqrt(np.sum(ug * ug, axis=0))
    gfac = mag ** (beta - 1.0)
    c = _from_grid(gfac[None] * ug, u.d, u.K, M)
    return SpectralField(u.d, u.K, _project_coeffs(alpha * c, u.d, u.K))


# ---------------------------------------------------------------------------
# field construction
# ---------------------------------------------------------------------------


def _random_coeff_batch(d, K, count, rng, decay=2.0):
    """Batch of random solenoidal coefficient arrays, shape (count, d, cube)."""
    g = get_grid(d, K, 2 * K + 1)
    shape = (count, d) + (2 * K + 1,) * d
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= (1.0 + g.ksq) ** (-decay / 2.0)
    rev = (Ellipsis,) + (slice(None, None, -1),) * d
    c = 0.5 * (c + np.conj(c[rev]))
    return _project_coeffs(c, d, K)


def random_solenoidal(d, K, seed=None, rng=None, h_norm_target=1.0, decay=2.0):
    """Deterministic random solenoidal field with a smooth power-law spectrum.

    Reality and solenoidality hold exactly; the H norm matches the target to
    the projector's snap precision.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    c = _random_coeff_batch(d, K, 1, rng, decay)[0]
    f = SpectralField(d, K, c)
    if h_norm_target is not None:
        cur = h_norm(f)
        if cur == 0.0:
            raise ParameterError("random field degenerated to zero, cannot normalize")
        f = SpectralField(d, K, _project_coeffs((h_norm_target / cur) * c, d, K))
    return f


def fit_advection_constant(d, K, M=None, n=64, seed=0):
    """Empirical constant in |b(u,v,w)| <= C ||u||^(1/2) |Au|^(1/2) ||v|| |w|.

    The constant is not pinned analytically at finite truncation; this
    samples random solenoidal triples and returns the largest observed
    ratio, for reporting rather than assertion.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        u = random_solenoidal(d, K, rng=rng)
        v = random_solenoidal(d, K, rng=rng)
        w = random_solenoidal(d, K, rng=rng)
        denom = (
            v_norm(u) ** 0.5
            * h_norm(stokes_apply(u)) ** 0.5
            * v_norm(v)
            * h_norm(w)
        )
        if denom == 0.0:
            continue
        worst = max(worst, abs(trilinear_b(u, v, w, M)) / denom)
    return worst
