"""Pointwise energy and flux densities, the stress-energy tensor, its
divergence and boost transformation law, weak-equation residuals, and the
cone integration-by-parts identity.

Sign conventions, fixed project-wide: signature (-,+,+,+), so the Lagrangian
density is d_a u . d^a u = |grad u|^2 - |u_t|^2, the strong equation used
numerically is u_tt = Lap(u) + (|grad u|^2 - |u_t|^2) u, and the box operator
in the cone identity is box = d_tt - Lap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldEvaluator, JetSample, MapParams
from .manufactured import ComposedWithBoost, bump_gradient, bump_profile, bump_value
from .spacetime import ETA, LorentzBoost, SpacetimePoint

SQRT2 = np.sqrt(2.0)


def energy_density(jet: JetSample) -> float:
    return 0.5 * (float(np.dot(jet.dt, jet.dt)) + float(np.sum(jet.grad**2)))


def flux_density(jet: JetSample, n) -> float:
    """(1/(2 sqrt 2)) |grad u - n (x) u_t|^2 for a unit spatial direction n."""
    n = np.asarray(n, dtype=float)
    diff = jet.grad - np.outer(n, jet.dt)
    return float(np.sum(diff**2)) / (2.0 * SQRT2)


def flux_form_Q(jet_u: JetSample, jet_w: JetSample, n) -> float:
    """Bilinear flux form; Q(u, u) = 2 * flux_density(u, n)."""
    n = np.asarray(n, dtype=float)
    du = jet_u.grad - np.outer(n, jet_u.dt)
    dw = jet_w.grad - np.outer(n, jet_w.dt)
    return float(np.sum(du * dw)) / SQRT2


@dataclass(frozen=True)
class StressTensor:
    components: np.ndarray  # (4, 4), index-down, symmetric

    def __post_init__(self):
        object.__setattr__(self, "components",
                           np.asarray(self.components, dtype=float))


def stress_tensor(jet: JetSample) -> StressTensor:
    """T_ab = 1/2 eta_ab (d^c u . d_c u) - d_a u . d_b u, indices down."""
    D = np.vstack([jet.dt, jet.grad])  # D[a] = d_a u
    lag = float(np.sum(jet.grad**2)) - float(np.dot(jet.dt, jet.dt))
    return StressTensor(0.5 * ETA * lag - D @ D.T)


def divergence_T(field: FieldEvaluator, pt: SpacetimePoint, h: float) -> np.ndarray:
    """d^a T_ab by second-order central differences; the caller guarantees
    smoothness of the field in an h-neighborhood."""
    def tensor(dt, dx):
        p = SpacetimePoint(pt.t + dt, pt.x + dx)
        return stress_tensor(field.jet(p)).components

    zero = np.zeros(3)
    # d^0 = -d_t
    div = -(tensor(h, zero)[0] - tensor(-h, zero)[0]) / (2.0 * h)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        div += (tensor(0.0, e)[i + 1] - tensor(0.0, -e)[i + 1]) / (2.0 * h)
    return div


def transformation_check(field: FieldEvaluator, boost: LorentzBoost,
                         pt: SpacetimePoint, h: float):
    """Both sides of the boost law for the stress-tensor divergence.

    lhs: divergence of the stress tensor of f o L at pt.
    rhs: L-contraction of the divergence of the stress tensor of f at L pt.
    """
    composed = ComposedWithBoost(field, boost.matrix)
    lhs = divergence_T(composed, pt, h)
    image = SpacetimePoint.from_vector(boost.matrix @ pt.as_vector())
    rhs = boost.matrix.T @ divergence_T(field, image, h)
    return lhs, rhs


@dataclass(frozen=True)
class BumpTest:
    """Smooth radial bump exp(-1/(1-r^2)) scaled to a given support radius.

    ``center`` may be a SpacetimePoint (spacetime bump, 4-D radial) or a
    3-vector (spatial bump).  The profile is numerically normalized so the
    bump integrates to one over its support.
    """

    center: object
    scale: float

    def _split(self):
        if isinstance(self.center, SpacetimePoint):
            return self.center.as_vector(), 4
        return np.asarray(self.center, dtype=float), 3

    @property
    def dim(self) -> int:
        return self._split()[1]

    @property
    def norm_const(self) -> float:
        return _bump_norm(self.dim) / self.scale**self.dim

    def value_at(self, coords) -> float:
        c, _ = self._split()
        return self.norm_const * bump_value(coords, c, self.scale)

    def gradient_at(self, coords) -> np.ndarray:
        c, _ = self._split()
        return self.norm_const * bump_gradient(coords, c, self.scale)

    def value(self, pt: SpacetimePoint) -> float:
        c, dim = self._split()
        coords = pt.as_vector() if dim == 4 else pt.x
        return self.norm_const * bump_value(coords, c, self.scale)

    def spacetime_gradient(self, pt: SpacetimePoint) -> np.ndarray:
        """(d_t psi, grad psi); the time slot is zero for spatial bumps."""
        c, dim = self._split()
        if dim == 4:
            return self.norm_const * bump_gradient(pt.as_vector(), c, self.scale)
        g = self.norm_const * bump_gradient(pt.x, c, self.scale)
        return np.concatenate(([0.0], g))

    def batch(self, coords: np.ndarray):
        """Vectorized (psi, D psi) at coords of shape (N, dim)."""
        from .manufactured import bump_profile_arr, bump_profile_ds_arr

        c, _ = self._split()
        y = np.asarray(coords, dtype=float) - c
        s = np.sum(y**2, axis=1) / self.scale**2
        psi = self.norm_const * bump_profile_arr(s)
        dpsi = (self.norm_const * 2.0 / self.scale**2) \
            * bump_profile_ds_arr(s)[:, None] * y
        return psi, dpsi


_BUMP_NORMS: dict[int, float] = {}


def _bump_norm(dim: int) -> float:
    """1 / integral of the unit bump over the unit ball in `dim` dimensions."""
    if dim not in _BUMP_NORMS:
        areas = {1: 2.0, 3: 4.0 * np.pi, 4: 2.0 * np.pi**2}
        xs, ws = np.polynomial.legendre.leggauss(80)
        r = 0.5 * (xs + 1.0)
        w = 0.5 * ws
        vals = np.array([bump_profile(ri**2) for ri in r])
        _BUMP_NORMS[dim] = 1.0 / (areas[dim] * float(np.sum(w * vals * r**(dim - 1))))
    return _BUMP_NORMS[dim]


def weak_residual(field: FieldEvaluator, test: BumpTest, rule) -> np.ndarray:
    """Distributional residual of the wave-map equation against a scalar
    spacetime bump: per target component,

        int [ u_t d_t(psi) - grad u : grad psi + (|grad u|^2 - |u_t|^2) u psi ].

    Zero (in the quadrature-refinement limit) for weak solutions whose
    singular set avoids the bump's support.
    """
    from .quadrature import SphereRule

    if test.dim != 4:
        raise ValueError("weak_residual needs a spacetime bump")
    c = test.center.as_vector()
    t0, x0, sigma = c[0], c[1:], test.scale

    xt, wt = np.polynomial.legendre.leggauss(rule.n_time)
    xr, wr = np.polynomial.legendre.leggauss(rule.n_radial)
    sph = SphereRule(rule.n_polar)

    res = np.zeros(3)
    for k in range(rule.n_time):
        t = t0 + sigma * xt[k]
        w_t = sigma * wt[k]
        rho = np.sqrt(max(sigma**2 - (t - t0)**2, 0.0))
        if rho == 0.0:
            continue
        r_nodes = 0.5 * rho * (xr + 1.0)[:, None]                  # (K, 1)
        weights = (w_t * 0.5 * rho * wr[:, None]
                   * sph.weights[None, :] * r_nodes**2).ravel()
        xs = (x0[None, None, :]
              + r_nodes[:, :, None] * sph.nodes[None, :, :]).reshape(-1, 3)
        ts = np.full(len(xs), t)
        values, dts, grads = field.jets_at(ts, xs)
        psi, dpsi = test.batch(np.column_stack([ts, xs]))
        lag = np.sum(grads**2, axis=(1, 2)) - np.sum(dts**2, axis=1)
        integrand = (dts * dpsi[:, 0][:, None]
                     - np.einsum("nij,ni->nj", grads, dpsi[:, 1:])
                     + (lag * psi)[:, None] * values)
        res += weights @ integrand
    return res


def recover_point_charge(params: MapParams, test: BumpTest, rule,
                         rho: float = 1e-2) -> np.ndarray:
    """Distributional divergence of the spatial stress tensor of the dilated
    hedgehog, paired with a spatial test bump centered at the origin:

        J_j = - int S_ij d_i(psi) dx  ->  (0, 0, s(lambda) psi(0)).

    The quadrature excludes a ball of radius rho around the singular point and
    Richardson-extrapolates rho -> 0 (the excluded contribution is O(rho^2)
    because the bump's gradient vanishes at its center).
    """
    if test.dim != 3:
        raise ValueError("recover_point_charge needs a spatial bump")

    def pairing(rho_excl: float) -> np.ndarray:
        return _charge_pairing(params, test, rule, rho_excl)

    f1 = pairing(rho)
    f2 = pairing(rho / 2.0)
    return (4.0 * f2 - f1) / 3.0


def _charge_pairing(params: MapParams, test: BumpTest, rule,
                    rho: float) -> np.ndarray:
    from .fields import harmonic_v_jet_batch
    from .quadrature import SphereRule

    sigma = test.scale
    sph = SphereRule(rule.n_polar)
    xr, wr = np.polynomial.legendre.leggauss(rule.n_radial)
    r_nodes = rho + 0.5 * (sigma - rho) * (xr + 1.0)
    r_weights = 0.5 * (sigma - rho) * wr

    xs = (r_nodes[:, None, None] * sph.nodes[None, :, :]).reshape(-1, 3)
    weights = (r_weights[:, None] * sph.weights[None, :]
               * r_nodes[:, None]**2).ravel()
    _, grads = harmonic_v_jet_batch(params, xs)
    # spatial stress: S_ij = -<d_i v, d_j v> + (1/2) delta_ij |grad v|^2
    cross = np.einsum("nic,njc->nij", grads, grads)
    tr = np.einsum("nii->n", cross)
    S = -cross + 0.5 * tr[:, None, None] * np.eye(3)[None]
    _, dpsi = test.batch(xs)
    return -np.einsum("n,nij,ni->j", weights, S, dpsi)


@dataclass(frozen=True)
class CompIdentityResult:
    lhs: float
    rhs: float
    dw0_norm: float  # size of Dw on the base; nonzero flags a missing term


def comp_identity_check(u: FieldEvaluator, w: FieldEvaluator, R: float,
                        T: float, rule) -> CompIdentityResult:
    """Both sides of the cone integration-by-parts identity for smooth fields
    on the truncated backward cone of base radius R and height T < R, centered
    at the spatial origin with base at t = 0:

        int_{D_{R-T}} Du . Dw
          = int_0^T int_{D_{R-t}} (box u . w_t + box w . u_t)
            - int_{M_T} Q(u, w) dsigma,

    with Du . Dw the Euclidean dot over all four partials and box = d_tt - Lap.
    The identity requires Dw = 0 on the base; a violation is reported through
    ``dw0_norm`` rather than raised.
    """
    from .quadrature import SphereRule

    if not 0.0 < T < R:
        raise ValueError("need 0 < T < R")
    sph = SphereRule(rule.n_polar)
    xr, wr = np.polynomial.legendre.leggauss(rule.n_radial)
    u_ref, w_ref = 0.5 * (xr + 1.0), 0.5 * wr
    xt, wt = np.polynomial.legendre.leggauss(rule.n_time)
    t_nodes = 0.5 * T * (xt + 1.0)
    t_weights = 0.5 * T * wt

    def ball_nodes(radius):
        r = radius * u_ref[:, None]
        weights = (radius * w_ref[:, None] * sph.weights[None, :] * r**2).ravel()
        xs = (r[:, :, None] * sph.nodes[None, :, :]).reshape(-1, 3)
        return xs, weights

    def ball_integral_dudw(t, radius):
        xs, weights = ball_nodes(radius)
        ts = np.full(len(xs), t)
        _, du_t, du_g = u.jets_at(ts, xs)
        _, dw_t, dw_g = w.jets_at(ts, xs)
        dens = np.sum(du_t * dw_t, axis=1) + np.sum(du_g * dw_g, axis=(1, 2))
        return float(np.dot(weights, dens))

    # left side: Du . Dw over the top disk
    lhs = ball_integral_dudw(T, R - T)

    # right side: bulk term minus lateral flux-form term
    bulk = 0.0
    lateral = 0.0
    for tk, wk in zip(t_nodes, t_weights):
        rt = R - tk
        xs, weights = ball_nodes(rt)
        ts = np.full(len(xs), tk)
        _, du_t, _ = u.jets_at(ts, xs)
        _, dw_t, _ = w.jets_at(ts, xs)
        dens = (np.sum(u.box_at(ts, xs) * dw_t, axis=1)
                + np.sum(w.box_at(ts, xs) * du_t, axis=1))
        bulk += wk * float(np.dot(weights, dens))

        xb = rt * sph.nodes
        tb = np.full(len(xb), tk)
        _, du_t, du_g = u.jets_at(tb, xb)
        _, dw_t, dw_g = w.jets_at(tb, xb)
        pu = du_g - sph.nodes[:, :, None] * du_t[:, None, :]
        pw = dw_g - sph.nodes[:, :, None] * dw_t[:, None, :]
        q = np.sum(pu * pw, axis=(1, 2)) / SQRT2
        lateral += SQRT2 * wk * rt**2 * float(np.dot(sph.weights, q))

    # Dw on the base, sampled
    xs, _ = ball_nodes(R)
    _, dw_t, dw_g = w.jets_at(np.zeros(len(xs)), xs)
    dw0 = float(np.sqrt(np.max(np.sum(dw_t**2, axis=1)
                               + np.sum(dw_g**2, axis=(1, 2)))))

    return CompIdentityResult(lhs, bulk - lateral, dw0)
