"""Right-hand sides for the damped Navier-Stokes system and its globally
modified variant, plus the cutoff function and the inequality verifiers the
stability theory rests on.

The truncated system solved here is

    du/dt = -mu A u - F_N(||u||) P B(u, u) - F_N(||u||^(beta-1)) G(u) + f

with A the Stokes operator, B the advection term, G(u) = alpha P |u|^(beta-1) u
the damping, and F_N(r) = min(1, N/r) the cutoff.  N = +inf recovers the
unmodified damped system bitwise, since every multiplication is then by the
exact float 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import fields as fl
from .errors import ParameterError

INF = math.inf


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class SimConfig:
    """Parameters of one run, validated at construction."""

    d: int
    K: int
    mu: float
    alpha: float
    beta: float
    n_cut: float
    dt: float
    t_end: float
    tau: float = 0.0
    grid_m: int = 0
    snapshot_stride: int = 1
    forcing: fl.SpectralField | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ParameterError(f"dimension must be 2 or 3, got {self.d}")
        if self.K < 1:
            raise ParameterError(f"need K >= 1, got {self.K}")
        if not self.mu > 0:
            raise ParameterError(f"need mu > 0, got {self.mu}")
        if not self.alpha > 0:
            raise ParameterError(f"need alpha > 0, got {self.alpha}")
        if not self.beta >= 1:
            raise ParameterError(f"need beta >= 1, got {self.beta}")
        if not self.n_cut > 0:
            raise ParameterError(f"need n_cut > 0 (or inf), got {self.n_cut}")
        if not self.dt > 0:
            raise ParameterError(f"need dt > 0, got {self.dt}")
        if not self.t_end > self.tau:
            raise ParameterError(f"need t_end > tau, got [{self.tau}, {self.t_end}]")
        if self.grid_m == 0:
            self.grid_m = 4 * self.K
        if self.grid_m < 4 * self.K:
            raise ParameterError(f"need grid_m >= 4K = {4 * self.K}, got {self.grid_m}")
        if self.snapshot_stride < 1:
            raise ParameterError(f"need snapshot_stride >= 1, got {self.snapshot_stride}")
        if self.forcing is None:
            self.forcing = fl.SpectralField.zeros(self.d, self.K)
        if self.forcing.d != self.d or self.forcing.K != self.K:
            raise ParameterError("forcing does not live on the configured mode cube")
        fl.validate_field(self.forcing)

    def with_(self, **kw):
        return replace(self, **kw)

    @property
    def modified(self):
        return math.isfinite(self.n_cut)


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------


def f_cut(n_cut, r):
    """F_N(r) = min(1, N/r), with F_N(0) = 1 and F_inf identically 1.

    Returns the exact float 1.0 whenever r <= N, so multiplying by the
    cutoff is a bitwise no-op in the inactive regime.
    """
    if not n_cut > 0:
        raise ParameterError(f"need n_cut > 0, got {n_cut}")
    if r < 0 or math.isnan(r):
        raise ParameterError(f"cutoff argument must be >= 0, got {r}")
    if math.isinf(n_cut) or r <= n_cut:
        return 1.0
    return n_cut / r


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------


def _nonlinear_coeffs(coeffs, cfg):
    """Projected coefficients of  -F_N(||u||) B(u,u) - F_N(||u||^(b-1)) G(u) + f.

    Operates on a raw coefficient array so the integrator can feed stage
    states that have not been re-projected yet.
    """
    d, K, M = cfg.d, cfg.K, cfg.grid_m
    g = fl.get_grid(d, K, 2 * K + 1)

    mag2 = coeffs.real ** 2 + coeffs.imag ** 2
    vn = math.sqrt(fl.TWO_PI ** d * float(np.sum(g.ksq * mag2)))
    fn_adv = f_cut(cfg.n_cut, vn)
    fn_damp = f_cut(cfg.n_cut, vn ** (cfg.beta - 1.0))

    ug = fl._to_grid_complex(coeffs, d, K, M).real
    grads = np.empty((d, d) + (2 * K + 1,) * d, dtype=np.complex128)
    for i in range(d):
        grads[i] = (1j * g.kvec[i]) * coeffs
    dug = fl._to_grid_complex(grads, d, K, M).real
    adv_g = np.einsum("i...,ij...->j...", ug, dug)

    if cfg.beta == 1:
        adv_c = fl._from_grid(adv_g, d, K, M)
        damp_c = cfg.alpha * coeffs
    else:
        mag = np.sqrt(np.sum(ug * ug, axis=0))
        damp_g = mag ** (cfg.beta - 1.0) * ug
        both = fl._from_grid(np.stack([adv_g, damp_g]), d, K, M)
        adv_c = both[0]
        damp_c = cfg.alpha * both[1]

    raw = -fn_adv * adv_c - fn_damp * damp_c + cfg.forcing.coeffs
    return fl._project_coeffs(raw, d, K)


def rhs(u, cfg):
    """Full right-hand side as a solenoidal spectral field."""
    fl.validate_field(u)
    if u.d != cfg.d or u.K != cfg.K:
        raise ParameterError("state does not live on the configured mode cube")
    g = fl.get_grid(cfg.d, cfg.K, 2 * cfg.K + 1)
    raw = -cfg.mu * g.ksq * u.coeffs + _nonlinear_coeffs(u.coeffs, cfg)
    return fl.SpectralField(cfg.d, cfg.K, fl._project_coeffs(raw, cfg.d, cfg.K))


def cutoff_values(u, cfg):
    """(F_N(||u||), F_N(||u||^(beta-1))) at the given state."""
    vn = fl.v_norm(u)
    return f_cut(cfg.n_cut, vn), f_cut(cfg.n_cut, vn ** (cfg.beta - 1.0))


# ---------------------------------------------------------------------------
# inequality verifiers
# ---------------------------------------------------------------------------


def verify_fn_lipschitz(u, v, beta, n_cut, c_probe):
    """Check |F_N(||u||^(b-1)) - F_N(||v||^(b-1))| against the three-case
    Lipschitz estimate, normalized by C_probe ||u - v|| / max(||u||, ||v||).

    Case 1 (both arguments at or below N) must give exactly zero.  The other
    cases report the ratio rather than asserting a universal constant; for
    beta in [1, 2) the estimate degenerates and the report flags it.
    """
    if beta < 1:
        raise ParameterError(f"need beta >= 1, got {beta}")
    nu = fl.v_norm(u)
    nv = fl.v_norm(v)
    p = nu ** (beta - 1.0)
    q = nv ** (beta - 1.0)
    lhs = abs(f_cut(n_cut, p) - f_cut(n_cut, q))
    if p <= n_cut and q <= n_cut:
        case = 1
    elif p > n_cut and q > n_cut:
        case = 2
    else:
        case = 3
    diff = fl.SpectralField(u.d, u.K, u.coeffs - v.coeffs)
    mx = max(nu, nv)
    rhs_val = c_probe * fl.v_norm(diff) / mx if mx > 0 else 0.0
    return {
        "case": case,
        "lhs": lhs,
        "rhs": rhs_val,
        "ratio": lhs / rhs_val if rhs_val > 0 else (0.0 if lhs == 0.0 else math.inf),
        "holds": lhs <= rhs_val if case != 1 else lhs == 0.0,
        "beta_flagged": beta < 2,
    }


def verify_fmn(m_cut, n_cut, p, r):
    """Check |F_M(p) - F_N(r)| <= (M/(r p)) |p - r| + |M - N| / r.

    The bound is attained with equality on an open set of inputs (for
    example p, r > max(M, N) with p < r and M > N), so the comparison allows
    a 1e-12 relative rounding guard; mathematically the inequality is never
    violated.
    """
    for name, val in (("m_cut", m_cut), ("n_cut", n_cut), ("p", p), ("r", r)):
        if not val > 0 or not np.isfinite(val):
            raise ParameterError(f"need finite {name} > 0, got {val}")
    lhs = abs(f_cut(m_cut, p) - f_cut(n_cut, r))
    rhs_val = m_cut / (r * p) * abs(p - r) + abs(m_cut - n_cut) / r
    tol = 1e-12 * max(lhs, rhs_val)
    return {"lhs": lhs, "rhs": rhs_val, "holds": lhs <= rhs_val + tol}


def verify_fmn_many(m_arr, n_arr, p_arr, r_arr):
    """Vectorized form of verify_fmn for large randomized audits."""
    m_arr, n_arr, p_arr, r_arr = (np.asarray(x, dtype=float) for x in (m_arr, n_arr, p_arr, r_arr))
    if not (np.all(m_arr > 0) and np.all(n_arr > 0) and np.all(p_arr > 0) and np.all(r_arr > 0)):
        raise ParameterError("all inputs must be positive")
    fm = np.minimum(1.0, m_arr / p_arr)
    fn = np.minimum(1.0, n_arr / r_arr)
    lhs = np.abs(fm - fn)
    rhs_val = m_arr / (r_arr * p_arr) * np.abs(p_arr - r_arr) + np.abs(m_arr - n_arr) / r_arr
    tol = 1e-12 * np.maximum(lhs, rhs_val)
    ok = lhs <= rhs_val + tol
    margin = rhs_val - lhs
    return {
        "checked": int(ok.size),
        "violations": int(np.count_nonzero(~ok)),
        "min_margin": float(np.min(margin)),
    }


def damping_monotone_gap(u, v, beta, M=None):
    """Grid quadrature of (|u|^(b-1) u - |v|^(b-1) v) . (u - v).

    The integrand is pointwise nonnegative, so the quadrature can only dip
    below zero by accumulated rounding; callers compare against a tiny
    negative tolerance.  Returns (integral, pointwise minimum).
    """
    if beta < 1:
        raise ParameterError(f"need beta >= 1, got {beta}")
    if u.d != v.d or u.K != v.K:
        raise ParameterError("fields must share a mode cube")
    if M is None:
        M = 4 * u.K
    ug = fl.to_physical(u, M)
    vg = fl.to_physical(v, M)
    mu_ = np.sqrt(np.sum(ug * ug, axis=0))
    mv_ = np.sqrt(np.sum(vg * vg, axis=0))
    gu = mu_ ** (beta - 1.0) * ug if beta != 1 else ug
    gv = mv_ ** (beta - 1.0) * vg if beta != 1 else vg
    pointwise = np.einsum("i...,i...->...", gu - gv, ug - vg)
    return fl.grid_quadrature(pointwise, u.d, M), float(np.min(pointwise))
