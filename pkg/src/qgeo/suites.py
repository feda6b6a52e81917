"""Verification suites: named checks aggregated over seeded trials.

Each check produces a record ``{name, identity, lhs, rhs, residual,
tolerance, trials, pass}``.  Over several trials the record keeps the trial
with the largest residual (earliest trial on ties), so the aggregate does
not depend on evaluation order.  Trial ``t`` of a suite draws from
``default_rng([seed, salt, t])``; trials are independent and any subset can
be recomputed on its own.
"""

from __future__ import annotations

import math
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import evolution as ev
from . import fisher as fi
from . import hilbert as hs
from . import kahler as kg
from . import observables as ob
from . import potential as qp
from . import weyl as wg
from .grid import DensityGrid, Grid

SUITES = ("kahler", "brackets", "fisher", "madelung", "weyl")

DEFAULT_TOLERANCES = {
    # hilbert / kahler
    "hermitian_symmetry": 1e-14,
    "chart_consistency": 1e-10,
    "ray_phase_invariance": 1e-10,
    "metric_J_compat": 1e-12,
    "symplectic_J_compat": 1e-12,
    "complex_structure": 1e-15,
    "positive_definite": 1e-14,
    "potential_hessian": 1e-6,
    "potential_pairing": 1e-6,
    "geodesic_chart_independence": 1e-10,
    "geodesic_unitary_invariance": 1e-12,
    "nijenhuis": 1e-6,
    # brackets and uncertainty
    "poisson_vs_commutator": 1e-9,
    "riemann_vs_anticommutator": 1e-9,
    "kahler_vs_covariance": 1e-9,
    "circ_vs_jordan": 1e-9,
    "star_vs_product": 1e-9,
    "star_split": 1e-10,
    "circ_symmetrized_star": 1e-9,
    "poisson_from_star": 1e-9,
    "jacobi": 1e-8,
    "riemann_self_dispersion": 1e-10,
    "flow_isometry": 1e-8,
    "flow_generator": 1e-6,
    "differential_norm": 1e-10,
    "stationary_eigenvector": 1e-10,
    "kahler_norm": 1e-8,
    "uncertainty_slack": 1e-10,
    "uncertainty_equality": 1e-9,
    # fisher
    "phase_variance_nonnegative": 1e-15,
    "fs_quadratic_order": 0.1,
    "sqrt_coordinate_metric": 1e-4,
    "exact_uncertainty_product": 1e-6,
    "exact_uncertainty_mean": 1e-8,
    "cross_entropy_gaussian": 1e-8,
    "binned_fisher": 1e-3,
    # madelung
    "split_join_roundtrip": 1e-12,
    "madelung_order": 1e-9,
    "madelung_final_gap": 1e-5,
    "entropy_rate": 1e-2,
    "entropy_monotone": 1e-12,
    "fisher_q_identity": 1e-6,
    "fisher_q_gaussian_value": 1e-6,
    # weyl
    "weyl_decomposition": 1e-5,
    "zero_gauge_reduction": 1e-12,
    "sphere_scalar": 1e-5,
    "bianchi": 1e-10,
    "riemann_antisymmetry": 1e-10,
    "nonmetricity": 1e-10,
    "transport_order": 0.2,
    "q_curvature": 1e-6,
    "q_curvature_order": 0.5,
    "fisher_curvature_constant": 1e-5,
}

KAHLER_DIMS = (2, 3, 4, 8)
# kahler_norm runs restarted power iterations; it is evaluated on this many trials
KAHLER_NORM_TRIALS = 20


class ConfigError(ValueError):
    """Invalid suite configuration."""


def _finite(x):
    """JSON-safe scalar: non-finite floats become strings."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class CheckRecord:
    name: str
    identity: str
    lhs: float
    rhs: float
    residual: float
    tolerance: float
    trials: int = 1

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.residual) and self.residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {"name": self.name, "identity": self.identity, "lhs": _finite(self.lhs),
                "rhs": _finite(self.rhs), "residual": _finite(self.residual),
                "tolerance": _finite(self.tolerance), "trials": self.trials,
                "pass": self.passed}


class Checks:
    """Max-residual aggregation keyed by record name."""

    def __init__(self, tolerances: dict):
        self.tolerances = tolerances
        self.records: dict[str, CheckRecord] = {}
        self.measurements: dict[str, float] = {}
        self.skipped: list[dict] = []

    def add(self, key: str, identity: str, lhs, rhs, residual, label: str = "") -> None:
        name = f"{key}[{label}]" if label else key
        residual = float(residual)
        rec = self.records.get(name)
        if rec is None:
            self.records[name] = CheckRecord(name, identity, float(np.real(lhs)), float(np.real(rhs)),
                                             residual, self.tolerances[key])
            return
        rec.trials += 1
        worse = not math.isfinite(residual) and math.isfinite(rec.residual)
        if worse or residual > rec.residual:
            rec.lhs, rec.rhs, rec.residual = float(np.real(lhs)), float(np.real(rhs)), residual

    def measure(self, name: str, value) -> None:
        self.measurements[name] = value

    def skip(self, name: str, reason: str) -> None:
        self.skipped.append({"name": name, "reason": reason})

    def merge(self, other: "Checks") -> None:
        self.records.update(other.records)
        self.measurements.update(other.measurements)
        self.skipped.extend(other.skipped)


def _rng(seed: int, salt: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, salt, trial])


def _herm(rng, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def _state(rng, n: int) -> np.ndarray:
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def _cvec(rng, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _cmat(rng, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def _unit_tangent(z, rng) -> kg.TangentVector:
    v = _cvec(rng, z.coords.size)
    return kg.TangentVector(z, v / np.linalg.norm(v))


# ---------------------------------------------------------------------------
# kahler suite

def kahler_trial(c: Checks, N: int, rng) -> None:
    label = f"N={N}"
    psi, phi = _state(rng, N), _state(rng, N)
    ip = hs.inner_product(phi, psi)
    c.add("hermitian_symmetry", "<phi|psi> = conj <psi|phi>", ip, np.conj(hs.inner_product(psi, phi)),
          abs(ip - np.conj(hs.inner_product(psi, phi))), label)

    j, k = (int(i) + 1 for i in rng.choice(N, 2, replace=False))
    a = hs.from_chart(hs.to_chart(psi, j)).amplitudes
    b = hs.from_chart(hs.to_chart(psi, k)).amplitudes
    ov = abs(np.vdot(a, b))
    c.add("chart_consistency", "|<chart j rep|chart k rep>| = 1", ov, 1.0, abs(ov - 1.0), label)

    theta = rng.uniform(0, 2 * np.pi)
    zk = hs.to_chart(psi, k).coords
    zk2 = hs.to_chart(np.exp(1j * theta) * psi, k).coords
    c.add("ray_phase_invariance", "chart coordinates of e^{i theta} psi = those of psi",
          0.0, 0.0, float(np.abs(zk - zk2).max()), label)

    z = hs.to_chart(psi)
    v, w = _unit_tangent(z, rng), _unit_tangent(z, rng)
    g, om = kg.fs_metric(z, v, w), kg.symplectic_form(z, v, w)
    Jv, Jw = kg.apply_J(v), kg.apply_J(w)
    rhs = kg.symplectic_form(z, v, Jw)
    c.add("metric_J_compat", "g(v,w) = omega(v,Jw)", g, rhs, abs(g - rhs), label)
    rhs = kg.fs_metric(z, Jv, w)
    c.add("symplectic_J_compat", "omega(v,w) = g(Jv,w)", om, rhs, abs(om - rhs), label)
    JJv = kg.apply_J(Jv).components
    c.add("complex_structure", "J J v = -v", 0.0, 0.0, float(np.abs(JJv + v.components).max()), label)
    gvv = kg.fs_metric(z, v, v)
    c.add("positive_definite", "g(v,v) > 0", gvv, 0.0, max(0.0, -gvv) + (gvv == 0), label)

    c.add("potential_hessian", "i d dbar log(1+|z|^2) = metric components", 0.0, 0.0,
          kg.potential_check(z), label)
    pv = kg.potential_pairing(z, v, w)
    c.add("potential_pairing", "g, omega from second derivatives of the potential",
          pv.g, g, max(abs(pv.g - g), abs(pv.omega - om)), label)

    d_j = kg.geodesic_distance(hs.to_chart(psi, j), hs.to_chart(phi, j))
    d_k = kg.geodesic_distance(hs.to_chart(psi, k), hs.to_chart(phi, k))
    c.add("geodesic_chart_independence", "distance from chart j = distance from chart k",
          d_j, d_k, abs(d_j - d_k), label)
    q, r = np.linalg.qr(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))
    U = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    d0 = kg.geodesic_distance(psi, phi)
    d1 = kg.geodesic_distance(U @ psi, U @ phi)
    c.add("geodesic_unitary_invariance", "d(U psi, U phi) = d(psi, phi)", d1, d0, abs(d1 - d0), label)

    # smooth non-holomorphic fields; J is constant in chart coordinates
    m = N - 1
    M1, M2 = _cmat(rng, m), _cmat(rng, m)
    u = _cvec(rng, m)
    c.add("nijenhuis", "N_J(X, Y) = 0 for nonlinear fields", 0.0, 0.0,
          kg.nijenhuis_residual(z, lambda q: M1 @ q + (M2 @ q.conj()) * q[0],
                                lambda q: np.sin(M2 @ q.conj()) + u * np.vdot(q, q).real), label)


def kahler_suite(c: Checks, dims=KAHLER_DIMS, trials: int = 1000, seed: int = 0) -> None:
    for N in dims:
        if N < 2:
            raise ConfigError("Hilbert dimension must be at least 2")
        for t in range(trials):
            kahler_trial(c, N, _rng(seed, 100 + N, t))


# ---------------------------------------------------------------------------
# brackets suite

def _jacobi(A, B, C, x, nu):
    """Cyclic sum of ``{<A>, {<B>, <C>}}`` with every bracket evaluated
    geometrically; the inner bracket is the mean value of
    ``[B, C] / (i nu)``."""
    total = 0.0
    for P, Q, R in ((A, B, C), (B, C, A), (C, A, B)):
        K = (Q @ R - R @ Q) / (1j * nu)
        total += ob.poisson_bracket_geometric(P, K, x, nu)
    return total


def bracket_trial(c: Checks, N: int, rng, t: int, nu: float = 1.0) -> None:
    label = f"N={N}"
    A, B, C = _herm(rng, N), _herm(rng, N), _herm(rng, N)
    x = _state(rng, N)
    rep = ob.bracket_report(A, B, x, nu)
    identities = {
        "poisson_vs_commutator": "omega(X_A, X_B) = <[A,B]/(i nu)>",
        "riemann_vs_anticommutator": "g(Y_A, Y_B) = (1/nu)<AB+BA> - (2/nu)<A><B>",
        "kahler_vs_covariance": "((A,B)) + i{A,B} = (2/nu)(<AB> - <A><B>)",
        "circ_vs_jordan": "(nu/2)((A,B)) + <A><B> = <(AB+BA)/2>",
        "star_vs_product": "(nu/2)<A,B> + <A><B> = <AB>",
        "star_split": "star - circ - (i nu/2){A,B} = 0",
        "circ_symmetrized_star": "circ = (A*B + B*A)/2",
        "poisson_from_star": "{A,B} = (A*B - B*A)/(i nu)",
    }
    for key, r in rep.lhs_rhs_residuals.items():
        c.add(key, identities[key], r, 0.0, r, label)

    jac = _jacobi(A, B, C, x, nu)
    c.add("jacobi", "cyclic {A,{B,C}} = 0", jac, 0.0, abs(jac), label)
    rr = ob.riemann_bracket_geometric(A, A, x, nu)
    d2 = 2 / nu * ob.dispersion(A, x)
    c.add("riemann_self_dispersion", "((A,A)) = (2/nu) Delta^2 A", rr, d2, abs(rr - d2), label)

    y = _state(rng, N)
    tt = rng.uniform(-10, 10)
    d0 = kg.geodesic_distance(x, y)
    d1 = kg.geodesic_distance(ob.flow(A, tt, x, nu), ob.flow(A, tt, y, nu))
    c.add("flow_isometry", "d(phi_t x, phi_t y) = d(x, y), |t| <= 10", d1, d0, abs(d1 - d0), label)
    h = 1e-4
    fd = (ob.mean_value(B, ob.flow(A, h, x, nu)) - ob.mean_value(B, ob.flow(A, -h, x, nu))) / (2 * h)
    pb = ob.poisson_bracket(B, A, x, nu)
    c.add("flow_generator", "d/dt <B> along the flow of A = {B, A}", fd, pb, abs(fd - pb), label)

    dn = ob.differential_norm(A, x)
    r = A @ x - ob.mean_value(A, x) * x
    ex = 2 * np.linalg.norm(r)
    c.add("differential_norm", "|d<A>| = 2 |(A - <A>) x|", dn, ex, abs(dn - ex), label)
    _, vecs = np.linalg.eigh(A)
    e = vecs[:, rng.integers(N)]
    res = ob.differential_norm(A, e) + (0.0 if ob.is_stationary(A, e) else 1.0)
    res += 1.0 if ob.is_stationary(A, x) else 0.0
    c.add("stationary_eigenvector", "eigenvectors are exactly the stationary rays", res, 0.0, res, label)

    if t < KAHLER_NORM_TRIALS:
        kn = ob.kahler_norm(A, seed=t)
        smax = float(np.linalg.svd(A, compute_uv=False)[0])
        c.add("kahler_norm", "sqrt(sup <A^2>) = largest singular value", kn, smax, abs(kn - smax), label)


def uncertainty_trial(c: Checks, N: int, rng, nu: float = 1.0) -> None:
    label = f"N={N}"
    A, B = _herm(rng, N), _herm(rng, N)
    x = _state(rng, N)
    u = ob.uncertainty_check(A, B, x, nu)
    c.add("uncertainty_slack", "Delta^2 A Delta^2 B >= commutator^2 + covariance^2",
          u.lhs, u.rhs, max(0.0, -u.slack), label)
    e = ob.uncertainty_check(A, A, x, nu)
    c.add("uncertainty_equality", "equality when B = A", e.lhs, e.rhs, abs(e.lhs - e.rhs), label)


def bracket_suite(c: Checks, N: int = 4, trials: int = 1000, seed: int = 0) -> None:
    if N < 2:
        raise ConfigError("Hilbert dimension must be at least 2")
    for t in range(trials):
        bracket_trial(c, N, _rng(seed, 200 + N, t), t)


def uncertainty_suite(c: Checks, N: int = 4, trials: int = 1000, seed: int = 0) -> None:
    for t in range(trials):
        uncertainty_trial(c, N, _rng(seed, 300 + N, t))


# ---------------------------------------------------------------------------
# fisher suite

FS_SWEEP = (1e-2, 1e-3, 1e-4)


def fs_trial(c: Checks, rng, outcomes: int = 8) -> list[float]:
    """One random (p, dp, dphi); returns the relative error of the quadratic
    line element at each sweep value."""
    p = rng.dirichlet(np.ones(outcomes))
    # relative perturbation keeps p + eps dp inside the simplex across the sweep
    r = rng.uniform(-1, 1, outcomes)
    dp = p * (r - np.sum(p * r))
    dphi = rng.standard_normal(outcomes)
    f, var = kg.fs_decomposition(p, dp, dphi)
    c.add("phase_variance_nonnegative", "sum p dphi^2 - (sum p dphi)^2 >= 0", var, 0.0,
          max(0.0, -var))
    errs = []
    for eps in FS_SWEEP:
        d = kg.fs_overlap_defect(p, eps * dp, eps * dphi)
        errs.append(abs(d / eps**2 - (f + var)) / (f + var))
    eps = 1e-6
    a = fi.fisher_metric_discrete(p, eps * dp)
    b = fi.sqrt_coordinate_metric(p, eps * dp)
    c.add("sqrt_coordinate_metric", "sum dp^2/p = 4 sum (d sqrt p)^2 to leading order",
          a, b, abs(a - b) / abs(b))
    return errs


def fisher_grid_checks(c: Checks, hbar: float = 1.0) -> None:
    g = Grid.uniform(1024, -20, 20, "periodic")
    x = g.axes()[0]
    # chirped packet: nonzero classical momentum spread
    sigma, k0, chirp = 1.3, 0.7, 0.4
    psi = np.exp(-x**2 / (4 * sigma**2) + 1j * (k0 * x + chirp * x**2))
    psi = psi / np.sqrt(g.integrate(np.abs(psi) ** 2))
    b = fi.exact_uncertainty(psi, g, hbar)
    c.add("exact_uncertainty_product", "deltaX dp_nc = hbar/2 (Gaussian)", b.product, hbar / 2,
          abs(b.product - hbar / 2))
    c.add("exact_uncertainty_mean", "<p> = <p_cl>", b.mean_p, b.mean_p_classical,
          abs(b.mean_p - b.mean_p_classical))

    gd = Grid.uniform(2001, -20, 20)
    s = 1.2
    rho = DensityGrid.from_function(lambda y: np.exp(-y**2 / (2 * s**2)), gd)
    dy = 0.05
    je, jq = fi.cross_entropy_expansion(rho, dy, "half", accuracy=8)
    exact = dy**2 / (2 * s**2)
    c.add("cross_entropy_gaussian", "J(dy) = dy^2 / (2 sigma^2) for a Gaussian", je, exact,
          max(abs(je - exact), abs(jq - exact)) / exact)
    bf = fi.binned_fisher(lambda y: np.exp(-y**2 / 2), -12, 12, 512)
    c.add("binned_fisher", "binned Fisher / delta^2 -> int (rho')^2/rho", bf, 1.0, abs(bf - 1.0))


def fisher_suite(c: Checks, trials: int = 1000, seed: int = 0) -> None:
    errs = np.array([fs_trial(c, _rng(seed, 400, t)) for t in range(trials)])
    # a single trial can have a vanishing first-order coefficient; the
    # worst case over trials is what must decay linearly
    env = errs.max(axis=0)
    order = float(np.min(np.diff(np.log(env)) / np.diff(np.log(FS_SWEEP))))
    c.add("fs_quadratic_order", "worst relative error of the quadratic line element is O(eps)",
          order, 1.0, max(0.0, 1.0 - order))
    c.measure("fs_quadratic.worst_relative_error", [float(e) for e in env])
    fisher_grid_checks(c)


# ---------------------------------------------------------------------------
# madelung suite

MADELUNG_LEVELS = ((256, 4e-3), (512, 2e-3), (1024, 1e-3))


def madelung_case(case: str, n: int, dt: float, T: float = 0.5) -> qp.ResidualNorms:
    g = Grid.uniform(n, -20, 20, "periodic")
    if case == "free":
        w = ev.gaussian_packet(g, 1.0, k0=0.5)
    else:
        w = ev.gaussian_packet(g, np.sqrt(0.5), x0=1.0, V=ev.harmonic_potential(g))
    steps = int(round(T / dt))
    r = ev.evolve_se(w, dt, steps + 1, snapshot_every=1)
    s = r.snapshots
    return qp.madelung_residuals(s[steps - 1].field, s[steps].field, s[steps + 1].field, 2 * dt)


def _orders(values) -> list[float]:
    v = np.asarray(values, float)
    return list(np.log2(v[:-1] / v[1:]))


def madelung_convergence(c: Checks) -> None:
    for case in ("free", "harmonic"):
        norms = [madelung_case(case, n, dt) for n, dt in MADELUNG_LEVELS]
        for kind in ("hj", "continuity"):
            vals = [getattr(r, kind) for r in norms]
            order = min(_orders(vals))
            c.add("madelung_order", f"{kind} residual decays at order >= 2 under (h, dt) halving",
                  order, 2.0, max(0.0, 2.0 - order), f"{case},{kind}")
            c.add("madelung_final_gap", f"{kind} residual at the finest level", vals[-1], 0.0,
                  vals[-1], f"{case},{kind}")
            c.measure(f"madelung.{case}.{kind}", [float(v) for v in vals])


def entropy_checks(c: Checks) -> None:
    g = Grid.uniform(2048, -40, 40)
    rho0 = DensityGrid.from_function(lambda x: np.exp(-x**2 / 2), g)
    D, dt = 0.5, 1e-3
    snaps = [(t, ev.heat_spread(rho0, D, t)) for t in (1.0 - dt, 1.0, 1.0 + dt)]
    er = qp.entropy_rate(snaps, D)
    c.add("entropy_rate", "dS/dt = D Tr F at mid-evolution", er.rate[0], er.fisher_rate[0],
          float(er.relative_gap[0]))
    ts = np.linspace(0.0, 2.0, 21)
    S = np.array([qp.entropy(ev.heat_spread(rho0, D, t)) for t in ts])
    drop = float(max(0.0, -np.diff(S).min()))
    c.add("entropy_monotone", "entropy never decreases", float(np.diff(S).min()), 0.0, drop)


def _bump(c: float, R: float):
    def f(*xs):
        r2 = sum(x * x for x in xs) / R**2
        out = np.zeros_like(r2)
        k = r2 < 1
        out[k] = np.exp(-c / (1 - r2[k]))
        return out
    return f


def fisher_q_checks(c: Checks, hbar: float = 1.0, mass: float = 1.0) -> None:
    cases = [
        ("gaussian,1d", Grid.uniform(1201, -12, 12), lambda x: np.exp(-x**2 / 2), 8, 1),
        ("bump,1d", Grid.uniform(1201, -4, 4), _bump(4, 4), 8, None),
        ("gaussian,3d", Grid.uniform(121, -7.5, 7.5, ndim=3),
         lambda x, y, z: np.exp(-(x * x + y * y + z * z) / 2), 8, 3),
        ("bump,3d", Grid.uniform(121, -4, 4, ndim=3), _bump(4, 4), 8, None),
    ]
    for label, g, f, acc, axes in cases:
        rho = DensityGrid.from_function(f, g)
        rep = qp.fisher_q_identity(rho, hbar, mass, acc)
        c.add("fisher_q_identity", "int rho Q = (hbar^2/8m) int |grad rho|^2/rho",
              rep.lhs, rep.rhs, rep.relative_gap, label)
        c.measure(f"fisher_q.{label}.relative_gap_negative_form", rep.relative_gap_negative_form)
        if axes:
            exact = axes * hbar**2 / (8 * mass)
            c.add("fisher_q_gaussian_value", "int rho Q = +hbar^2/(8 m sigma^2) per axis",
                  rep.lhs, exact, abs(rep.lhs - exact) / exact, label)


def madelung_suite(c: Checks) -> None:
    g = Grid.uniform(256, -20, 20, "periodic")
    w = ev.gaussian_packet(g, 1.0, k0=1.5)
    back = qp.madelung_join(qp.madelung_split(w))
    c.add("split_join_roundtrip", "join(split(psi)) = psi", 0.0, 0.0,
          float(np.abs(back.psi - w.psi).max()))
    madelung_convergence(c)
    entropy_checks(c)
    fisher_q_checks(c)


# ---------------------------------------------------------------------------
# weyl suite

def _curved_manifold(n: int = 25) -> tuple[wg.WeylManifold, np.ndarray]:
    g = Grid.uniform(n, -1, 1, ndim=3)
    X, Y, Z = g.mesh()
    met = np.zeros((3, 3) + g.shape)
    met[0, 0] = 1 + 0.2 * np.sin(X + Y)
    met[1, 1] = 1.5 + 0.1 * np.cos(2 * Z)
    met[2, 2] = 1 + 0.3 * X**2
    met[0, 1] = met[1, 0] = 0.1 * np.sin(Y * Z)
    met[0, 2] = met[2, 0] = 0.05 * X * Y
    phi = np.stack([0.3 * np.sin(Y), 0.2 * X * Z, 0.1 + 0.2 * np.cos(X)])
    return wg.WeylManifold(g, met, phi), met


def _gauss3(x, y, z):
    return np.exp(-(x * x + y * y + z * z) / 2)


def _mixture(x, y, z):
    return (np.exp(-((x - 1) ** 2 + y**2 + z**2) / 2)
            + 0.6 * np.exp(-((x + 1.2) ** 2 + (y - 0.5) ** 2 + z**2) / (2 * 1.1**2)))


def weyl_geometry_checks(c: Checks) -> None:
    # flat background with the density gauge
    g = Grid.uniform(41, -8, 8, ndim=3)
    rho = DensityGrid.from_function(_gauss3, g)
    M = wg.flat_manifold(g, wg.gauge_from_density(rho, 3))
    rep = wg.scalar_decomposition_check(M)
    c.add("weyl_decomposition", "R = Rdot + (n-1)((n-2) phi.phi - 2 div phi)",
          float(np.abs(rep.R[M.interior()]).max()), 0.0, rep.max_residual, "flat,density gauge")

    Mc, met = _curved_manifold()
    b = wg.curvature(Mc)
    I = b.interior
    rep = wg.scalar_decomposition_check(Mc, b)
    c.add("weyl_decomposition", "R = Rdot + (n-1)((n-2) phi.phi - 2 div phi)",
          float(np.abs(rep.R[I]).max()), 0.0, rep.max_residual, "curved,smooth gauge")
    b0 = wg.curvature(Mc.with_gauge(None))
    c.add("zero_gauge_reduction", "phi = 0 gives the Riemannian chain", 0.0, 0.0,
          float(np.abs(b0.scalar - b.riemannian_scalar)[I].max()))
    c.add("bianchi", "R^i_mkl + R^i_klm + R^i_lmk = 0", 0.0, 0.0, float(wg.bianchi_residual(b)[I].max()))
    c.add("riemann_antisymmetry", "R^i_mkl = -R^i_mlk", 0.0, 0.0,
          float(wg.antisymmetry_residual(b)[I].max()))
    G = wg.weyl_connection(Mc)
    nm = wg.nonmetricity(Mc, G)
    ex = 2 * np.einsum("ik...,l...->ikl...", met, Mc.gauge)
    c.add("nonmetricity", "g_ik,l = 2 g_ik phi_l", 0.0, 0.0, float(np.abs(nm - ex)[:, :, :, I].max()))

    node = (12, 12, 12)
    A0 = np.array([0.3, 1.0, -0.5])
    gaps = []
    for dq in (1e-3, 5e-4, 2.5e-4):
        _, dl, pr = wg.transport_step(Mc, node, A0, dq * np.array([1.0, 2.0, -1.0]), G)
        gaps.append(abs(dl - pr))
    order = min(_orders(gaps))
    c.add("transport_order", "length change = l phi_k dq^k + O(dq^2)", order, 2.0, abs(order - 2.0))

    # 2-sphere of radius a
    a, n = 1.7, 81
    gs = Grid((n, n), (2.0 / (n - 1), 1.0 / (n - 1)), (0.5, 0.0))
    th, _ = gs.mesh()
    ms = np.zeros((2, 2) + gs.shape)
    ms[0, 0] = a * a
    ms[1, 1] = a * a * np.sin(th) ** 2
    Ms = wg.WeylManifold(gs, ms, accuracy=6)
    Rs = wg.riemannian_scalar_standard(Ms)[Ms.interior()]
    c.add("sphere_scalar", "scalar curvature of the 2-sphere = 2/a^2", float(np.median(Rs)), 2 / a**2,
          float(np.abs(Rs - 2 / a**2).max()))


def q_curvature_checks(c: Checks, hbar: float = 1.0, mass: float = 1.0) -> None:
    cases = [("gaussian", Grid.uniform(121, -7.5, 7.5, ndim=3), _gauss3),
             ("mixture", Grid.uniform(121, -9, 9, ndim=3), _mixture)]
    for label, g, f in cases:
        rho = DensityGrid.from_function(f, g)
        q = wg.q_curvature_identity(rho, hbar, mass, n=3, accuracy=8)
        c.add("q_curvature", "Q = -(hbar^2/12m) R off the mask", float(np.abs(q.lhs[np.isfinite(q.lhs)]).max()),
              0.0, q.max_relative_gap, label)
        r = wg.fisher_curvature_report(rho, hbar, mass, accuracy=8, with_chain=False)
        c.add("fisher_curvature_constant", "I / int rho R = -8 gamma", r["fitted_constant"],
              r["corrected_constant"], r["relative_gap_corrected"], label)
        for key in ("fitted_constant", "implied_constant", "relative_gap_implied",
                    "printed_constant", "printed_over_fitted"):
            c.measure(f"fisher_curvature.{label}.{key}", r[key])

    gaps = []
    for n in (31, 61, 121):
        rho = DensityGrid.from_function(_gauss3, Grid.uniform(n, -7.5, 7.5, ndim=3))
        gaps.append(wg.q_curvature_identity(rho, hbar, mass, n=3, accuracy=4).max_relative_gap)
    order = _orders(gaps)[-1]
    c.add("q_curvature_order", "gap decays at 4th order (accuracy 4)", order, 4.0, abs(order - 4.0))
    c.measure("q_curvature.convergence_gaps", [float(v) for v in gaps])


def weyl_suite(c: Checks) -> None:
    weyl_geometry_checks(c)
    q_curvature_checks(c)


# ---------------------------------------------------------------------------
# run report

def environment_stamp() -> dict:
    return {"python": sys.version.split()[0], "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": platform.platform()}


@dataclass
class RunReport:
    suite: str
    seed: int
    trials: int
    dim: int | None
    records: list = field(default_factory=list)
    measurements: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_stamp)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def numeric(self) -> dict:
        """The reproducible part of the report."""
        return {
            "suite": self.suite, "seed": self.seed, "trials": self.trials, "dim": self.dim,
            "records": [r.as_dict() for r in self.records],
            "measurements": {k: _jsonable(v) for k, v in sorted(self.measurements.items())},
            "skipped": sorted(self.skipped, key=lambda s: s["name"]),
            "pass": self.passed,
        }

    def as_dict(self) -> dict:
        d = self.numeric()
        d["timing"] = self.timing
        d["environment"] = self.environment
        return d

    def summary(self) -> str:
        lines = []
        for r in self.records:
            lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name}  residual={r.residual:.3e}"
                         f"  tol={r.tolerance:.1e}  trials={r.trials}")
        for s in self.skipped:
            lines.append(f"SKIP  {s['name']}  {s['reason']}")
        n_fail = sum(not r.passed for r in self.records)
        lines.append(f"{len(self.records) - n_fail}/{len(self.records)} checks passed")
        return "\n".join(lines)


def _jsonable(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if v is None or isinstance(v, str):
        return v
    return _finite(v)


def run_suite(suite: str, dim: int | None = None, trials: int = 1000, seed: int = 0,
              tolerances: dict | None = None) -> RunReport:
    """Run one suite (or ``"all"``) and collect a :class:`RunReport`."""
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in (tolerances or {}).items():
        if k not in tol:
            raise ConfigError(f"unknown tolerance {k!r}")
        if not v > 0:
            raise ConfigError(f"tolerance {k!r} must be positive")
        tol[k] = float(v)
    if dim is not None and dim < 2:
        raise ConfigError("dim must be at least 2")
    names = SUITES if suite == "all" else (suite,)
    report = RunReport(suite, seed, trials, dim)
    total = time.perf_counter()
    for name in names:
        c = Checks(tol)
        t0 = time.perf_counter()
        if name == "kahler":
            kahler_suite(c, KAHLER_DIMS if dim is None else (dim,), trials, seed)
        elif name == "brackets":
            bracket_suite(c, 4 if dim is None else dim, trials, seed)
            uncertainty_suite(c, 4 if dim is None else dim, trials, seed)
        elif name == "fisher":
            fisher_suite(c, trials, seed)
        elif name == "madelung":
            madelung_suite(c)
        else:
            weyl_suite(c)
        if name in ("madelung", "weyl") and dim is not None:
            c.skip(f"{name}.dim", "grid suites use fixed grids; --dim applies to Hilbert-space suites")
        report.timing[name] = time.perf_counter() - t0
        report.records.extend(sorted(c.records.values(), key=lambda r: r.name))
        report.measurements.update(c.measurements)
        report.skipped.extend(c.skipped)
    report.timing["total"] = time.perf_counter() - total
    return report
