"""Run every applicable check on generated instances and collect reports."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..calculus import AnalyticFunction, OperatorTuple, random_polynomial
from ..dilation import schaffer_dilation, verify_dilation, von_neumann_check
from ..linalg import re_im_trace_bound, schatten_norm, trace
from ..perturbation import (
    PathSpec,
    first_derivative,
    ftc_trace,
    instance_scale,
    naive_second_order_trace,
    second_derivative,
    taylor_remainder_trace,
)
from ..rng import SplitMix64
from ..spectral import (
    DiscreteMeasure,
    chain_rule_trace,
    first_order_bounds,
    first_order_measures,
    frozen_coordinate_check,
    joint_diagonalize,
    normal_pair_formula,
    partition_trace_bound,
    second_order_bounds,
    second_order_measures,
    verify_first_order,
    verify_second_order,
)
from .config import ExperimentConfig
from .instances import Instance, generate_instance

FULL_MODES = (
    "counterexample",
    "normal_shared_basis",
    "selfadjoint_shared_basis",
    "selfadjoint_coupled",
    "normal_coupled",
    "single_contraction",
)

ALL_ANCHORS = (
    "pathperturb", "hij1", "ftc", "remr2", "chain", "pdest", "pd2est",
    "tf", "mutau", "min", "tf2", "nutau", "nin", "realweights", "support",
    "connection1", "connection2", "m2v-i", "m2v-ii", "arem1", "arem2", "con", "con2",
    "dilfla", "vNineq", "counterexample",
)  # fmt: skip


@dataclass
class CheckReport:
    check_name: str
    anchor: str
    lhs: complex | None
    rhs: complex | None
    residual: float | None
    bound: float | None
    tolerance: float
    passed: bool
    runtime_ms: float
    group: str
    detail: str = ""

    def to_dict(self) -> dict:
        def cx(z):
            return None if z is None else {"re": float(np.real(z)), "im": float(np.imag(z))}

        def fl(x):
            return None if x is None or not np.isfinite(x) else float(x)

        return {
            "check_name": self.check_name,
            "anchor": self.anchor,
            "group": self.group,
            "lhs": cx(self.lhs),
            "rhs": cx(self.rhs),
            "residual": fl(self.residual),
            "bound": fl(self.bound),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "runtime_ms": round(float(self.runtime_ms), 3),
            "detail": self.detail,
        }


@dataclass
class Outcome:
    lhs: complex | None = None
    rhs: complex | None = None
    residual: float | None = None
    bound: float | None = None
    tolerance: float = 0.0
    passed: bool = False
    detail: str = ""


def identity_outcome(lhs, rhs, tol: float, residual: float | None = None, detail: str = "") -> Outcome:
    r = abs(lhs - rhs) if residual is None else residual
    return Outcome(lhs, rhs, r, None, tol, bool(r <= tol), detail)


def bound_outcome(value: float, bound: float, tol: float, detail: str = "") -> Outcome:
    return Outcome(value, None, value, bound, tol, bool(value <= bound + tol), detail)


def worst_bound(records, tol: float, detail: str = "") -> Outcome:
    """Bound outcome for the record with the least slack."""
    rec = min(records, key=lambda r: r.bound - r.value)
    return bound_outcome(rec.value, rec.bound, tol, detail)


@dataclass
class SuiteResult:
    config: ExperimentConfig
    checks: list[CheckReport]
    measures: list[DiscreteMeasure] = field(default_factory=list)
    dilations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> list[CheckReport]:
        return [c for c in self.checks if not c.passed]

    def anchors(self) -> set[str]:
        return {c.anchor for c in self.checks}


class _Recorder:
    def __init__(self, cfg: ExperimentConfig, group: str):
        self.cfg = cfg
        self.group = group
        self.reports: list[CheckReport] = []
        self.measures: list[DiscreteMeasure] = []
        self.dilations: list[dict] = []

    def run(self, name: str, anchor: str, fn: Callable[[float], Outcome]) -> None:
        if not self.cfg.wants(anchor):
            return
        tol = self.cfg.tolerance(anchor)
        t0 = time.perf_counter()
        try:
            out = fn(tol)
        except Exception as exc:  # surfaced as a failed entry, never a crash
            out = Outcome(tolerance=tol, detail=f"{type(exc).__name__}: {exc}")
        ms = (time.perf_counter() - t0) * 1e3
        self.reports.append(
            CheckReport(name, anchor, out.lhs, out.rhs, out.residual, out.bound, out.tolerance, out.passed, ms, self.group, out.detail)
        )


def base_scale(path: PathSpec) -> float:
    """Instance scale for checks that do not involve a test function."""
    return instance_scale(AnalyticFunction.constant(path.n, 1.0), path)


def _nodes(cfg: ExperimentConfig, degree: int) -> np.ndarray:
    return cfg.quadrature.rule(degree)[0]


def _measurable(path: PathSpec, ts) -> bool:
    if not path.path_commuting:
        return False
    return all(path.X(float(t)).normal for t in ts)


def _univariate_tests(rng: SplitMix64, count: int, degree: int, kind: str) -> list[AnalyticFunction]:
    return [random_polynomial(rng, 1, degree, domain_kind=kind) for _ in range(count)]


def _lift(g: AnalyticFunction, n: int, j: int) -> AnalyticFunction:
    """``z -> g(z_j)`` as a function of ``n`` variables."""
    coeffs = {}
    for (p,), c in g.coeffs.items():
        k = [0] * n
        k[j] = p
        coeffs[tuple(k)] = c
    return AnalyticFunction(n, coeffs, domain_kind=g.domain_kind)


# ---------------------------------------------------------------------------
# check groups


def _path_checks(rec: _Recorder, inst: Instance) -> None:
    path = inst.path
    pc = path.commutativity

    def equivalence(tol):
        agree = pc.equiv_i == pc.equiv_ii
        return Outcome(float(pc.equiv_i), float(pc.equiv_ii), 0.0 if agree else 1.0, None, tol, agree,
                       f"equiv_i={pc.equiv_i} equiv_ii={pc.equiv_ii} max_commutator={pc.max_residual:.3e}")

    rec.run("path commutativity characterizations agree", "pathperturb", equivalence)
    if path.n >= 2:
        rec.run("path commutator four-term expansion", "hij1",
                lambda tol: identity_outcome(0j, 0j, tol, pc.identity_residual))


def _function_checks(rec: _Recorder, inst: Instance, fi: int, f: AnalyticFunction, measures) -> None:
    cfg = rec.cfg
    path = inst.path
    scale = instance_scale(f, path)
    tag = f"f{fi}"
    grid = cfg.grid_for(path.n)

    def ftc(tol):
        r = ftc_trace(f, path, cfg.quadrature)
        return identity_outcome(r.lhs, r.rhs, tol * scale, detail=f"{tag} nodes={r.nodes} exact={r.exact}")

    def remr2(tol):
        r = taylor_remainder_trace(f, path, cfg.quadrature)
        return identity_outcome(r.lhs, r.rhs, tol * scale, detail=f"{tag} nodes={r.nodes} exact={r.exact}")

    rec.run("trace of f(B)-f(A) as integral of first derivative", "ftc", ftc)
    rec.run("Taylor remainder trace as weighted integral of second derivative", "remr2", remr2)

    ts = _nodes(cfg, f.degree)
    if path.commutativity.equiv_i:
        def chain(tol):
            recs = [chain_rule_trace(f, path, float(t)) for t in ts]
            worst = max(recs, key=lambda r: r.residual)
            return identity_outcome(worst.lhs, sum(worst.per_j), tol * scale, detail=f"{tag} nodes={len(ts)}")

        def pdest(tol):
            recs = [b for t in ts for b in first_order_bounds(f, path, float(t), grid)]
            return worst_bound(recs, tol * scale, f"{tag} nodes={len(ts)}")

        rec.run("first derivative trace by partial derivatives", "chain", chain)
        rec.run("first-order trace bound on quadrature nodes", "pdest", pdest)
        if path.n == 1 or (path.A.normal and path.B.normal):
            def pd2est(tol):
                recs = [b for t in ts for b in second_order_bounds(f, path, float(t), grid).values()]
                return worst_bound(recs, tol * scale, f"{tag} nodes={len(ts)}")

            rec.run("second-order trace bound on quadrature nodes", "pd2est", pd2est)

    if measures is not None:
        mus, nus = measures
        rec.run("first-order trace formula", "tf",
                lambda tol: _trace_identity(verify_first_order(f, path, mus), tol * scale, tag))
        rec.run("second-order trace formula", "tf2",
                lambda tol: _trace_identity(verify_second_order(f, path, nus), tol * scale, tag))

    def vn(tol):
        recs = [von_neumann_check(x, f, grid) for x in (path.A, path.B)]
        certified = [r for r in recs if r.status.startswith("certified")]
        if not certified:
            return Outcome(tolerance=tol, passed=True, detail=f"{tag} unverified hypothesis, not checked")
        worst = min(certified, key=lambda r: r.margin)
        return bound_outcome(worst.op_value, worst.sup_value, tol, f"{tag} {worst.status}")

    rec.run("von Neumann inequality at the endpoints", "vNineq", vn)


def _trace_identity(r, tol: float, tag: str) -> Outcome:
    return identity_outcome(r.lhs, r.rhs, tol, detail=f"{tag} nodes={r.nodes}")


def _measure_checks(rec: _Recorder, inst: Instance, mus, nus, rng: SplitMix64) -> None:
    cfg = rec.cfg
    path = inst.path
    n = path.n
    s0 = base_scale(path)
    kind = inst.domain_kind
    for j, (m, v) in enumerate(zip(mus, path.V)):
        rec.run(f"mass of mu({j + 1}) equals Tr V_{j + 1}", "mutau",
                lambda tol, m=m, v=v: identity_outcome(m.mass, trace(v), tol * s0))
        rec.run(f"total variation bound for mu({j + 1})", "min",
                lambda tol, m=m, v=v: bound_outcome(m.total_variation, min(schatten_norm(v, 1), re_im_trace_bound(v)), tol))
    for (i, j), m in nus.items():
        vi, vj = path.V[i], path.V[j]
        rec.run(f"mass of nu({i + 1},{j + 1}) equals Tr(V_i V_j)/2", "nutau",
                lambda tol, m=m, vi=vi, vj=vj: identity_outcome(m.mass, trace(vi @ vj) / 2, tol * s0))
        rec.run(f"total variation bound for nu({i + 1},{j + 1})", "nin",
                lambda tol, m=m, vi=vi, vj=vj: bound_outcome(m.total_variation, schatten_norm(vi, 2) * schatten_norm(vj, 2) / 2, tol))
    everything = list(mus) + list(nus.values())
    if path.A.selfadjoint and path.B.selfadjoint:
        def real(tol):
            worst = max(m.max_imag_weight() for m in everything)
            return identity_outcome(0j, 0j, tol * s0, worst)

        rec.run("measures of self-adjoint paths have real weights", "realweights", real)

    def support(tol):
        r = max(m.support_radius(kind) for m in everything)
        return bound_outcome(r, 1.0, tol, kind)

    rec.run("measure support inside the unit domain", "support", support)

    tests = _univariate_tests(rng, cfg.connection_tests, max(cfg.degree, 2), kind)
    for j in range(n):
        sub = path.coordinate(j)

        def conn1(tol, j=j, sub=sub):
            one = first_order_measures(sub, cfg.quadrature, max_degree=max(cfg.degree, 2))[0]
            diffs = [abs(mus[j].marginal(j).integrate(g) - one.integrate(g)) for g in tests]
            sc = max(instance_scale(_lift(g, n, j), path) for g in tests)
            return identity_outcome(0j, 0j, tol * sc, max(diffs), f"{len(tests)} test polynomials")

        def conn2(tol, j=j, sub=sub):
            one = second_order_measures(sub, cfg.quadrature, max_degree=max(cfg.degree, 2))[(0, 0)]
            diffs = [abs(nus[(j, j)].marginal(j).integrate(g) - one.integrate(g)) for g in tests]
            sc = max(instance_scale(_lift(g, n, j), path) for g in tests)
            return identity_outcome(0j, 0j, tol * sc, max(diffs), f"{len(tests)} test polynomials")

        rec.run(f"marginal of mu({j + 1}) matches single-operator measure", "connection1", conn1)
        rec.run(f"marginal of nu({j + 1},{j + 1}) matches single-operator measure", "connection2", conn2)

    def m2v_i(tol):
        spec = joint_diagonalize(path.A)
        return worst_bound([partition_trace_bound(spec, v) for v in path.V], tol)

    def m2v_ii(tol):
        sa, sb = joint_diagonalize(path.A), joint_diagonalize(path.B)
        recs = [partition_trace_bound(sa, path.V[i], path.V[j], sb) for i in range(n) for j in range(n)]
        return worst_bound(recs, tol)

    rec.run("partition trace sum bounded by Re/Im trace norms", "m2v-i", m2v_i)
    rec.run("double partition trace sum bounded by Hilbert-Schmidt norms", "m2v-ii", m2v_ii)

    if n == 2 and path.A.selfadjoint and path.B.selfadjoint:
        g = random_polynomial(rng, 1, max(cfg.degree, 2))
        gs = instance_scale(g, path)
        rec.run("first-order formula for the normal operator X_1 + iX_2", "arem1",
                lambda tol: _trace_identity(normal_pair_formula(path, g, 1, quad=cfg.quadrature, measures=mus), tol * gs, "pair"))
        rec.run("second-order formula for the normal operator X_1 + iX_2", "arem2",
                lambda tol: _trace_identity(normal_pair_formula(path, g, 2, quad=cfg.quadrature, measures=nus), tol * gs, "pair"))

    if n >= 2:
        frozen = PathSpec(path.A, OperatorTuple((path.A[0],) + path.B.mats[1:], path.A.tol))
        ts = _nodes(cfg, max(cfg.degree, 2))
        if _measurable(frozen, ts):
            g = random_polynomial(rng, 1, max(cfg.degree, 2), domain_kind=kind)
            gs = instance_scale(_lift(g, n, 0), frozen)

            def con(tol):
                mu = first_order_measures(frozen, cfg.quadrature, max_degree=g.degree)[1]
                return _trace_identity(frozen_coordinate_check(frozen, g, 0, 1, 1, mu), tol * gs, "frozen x1")

            def con2(tol):
                nu = second_order_measures(frozen, cfg.quadrature, max_degree=g.degree)[(1, 1)]
                return _trace_identity(frozen_coordinate_check(frozen, g, 0, 1, 2, nu), tol * gs, "frozen x1")

            rec.run("integral against mu with a frozen coordinate", "con", con)
            rec.run("integral against nu with a frozen coordinate", "con2", con2)


def _dilation_checks(rec: _Recorder, inst: Instance) -> None:
    cfg = rec.cfg
    path = inst.path
    if path.n == 1:
        x = path.A[0]

        def dil(tol):
            _, cert = schaffer_dilation(x, cfg.dilation_degree)
            rec.dilations.append({"group": rec.group, "kind": "schaffer", **cert.to_dict()})
            r = max(cert.unitarity_residual, cert.compression_residual)
            return identity_outcome(0j, 0j, tol, r, f"dim {cert.base_dim}->{cert.dilated_dim} N={cert.degree}")

        def corrupt(tol):
            u, _ = schaffer_dilation(x, cfg.dilation_degree)
            u = u.copy()
            u[min(1, u.shape[0] - 1), 0] += 1e-3
            cert = verify_dilation(OperatorTuple((x,)), OperatorTuple((u,)), degree=cfg.dilation_degree, tol=tol)
            r = max(cert.unitarity_residual, cert.compression_residual)
            return Outcome(None, None, r, None, tol, not cert.passed, "perturbed entry by 1e-3; must be rejected")

        rec.run("Schaffer unitary dilation certificate", "dilfla", dil)
        rec.run("corrupted dilation is rejected", "dilfla", corrupt)
    elif path.A.commuting and path.A.normal and path.A.contractive:
        def selfdil(tol):
            cert = verify_dilation(path.A, path.A, degree=3, tol=tol)
            rec.dilations.append({"group": rec.group, "kind": "self", **cert.to_dict()})
            return identity_outcome(0j, 0j, tol, cert.compression_residual, f"{cert.words_checked} words")

        rec.run("normal commuting tuple dilates itself", "dilfla", selfdil)


def _counterexample_checks(rec: _Recorder, inst: Instance) -> None:
    path = inst.path
    f = inst.functions[0]

    rec.run("trace of second derivative for x1^3 x2", "counterexample",
            lambda tol: identity_outcome(trace(second_derivative(f, path, 0.0).value), 4.0 + 0j, tol))
    rec.run("naive chain-rule second-order trace for x1^3 x2", "counterexample",
            lambda tol: identity_outcome(naive_second_order_trace(f, path, 0.0), 3.0 + 0j, tol))
    rec.run("first derivative trace at t=0 for x1^3 x2", "counterexample",
            lambda tol: identity_outcome(trace(first_derivative(f, path, 0.0).value), 0j, tol))

    def chain0(tol):
        r = chain_rule_trace(f, path, 0.0)
        return identity_outcome(r.lhs, sum(r.per_j), tol, detail="t=0, where X(0) commutes")

    rec.run("first derivative trace by partial derivatives", "chain", chain0)


# ---------------------------------------------------------------------------


def run_instance(cfg: ExperimentConfig, inst: Instance, group: str) -> _Recorder:
    rec = _Recorder(cfg, group)
    rng = SplitMix64(inst.seed ^ 0x5DEECE66D)
    path = inst.path
    _path_checks(rec, inst)
    if inst.mode == "counterexample":
        _counterexample_checks(rec, inst)
    maxdeg = max(f.degree for f in inst.functions) if inst.functions else 2
    measures = None
    ts = _nodes(cfg, max(maxdeg, 2))
    if inst.mode != "counterexample" and _measurable(path, ts):
        try:
            mus = first_order_measures(path, cfg.quadrature, max_degree=max(maxdeg, 2), seed=inst.seed)
            nus = second_order_measures(path, cfg.quadrature, max_degree=max(maxdeg, 2), seed=inst.seed)
            measures = (mus, nus)
            rec.measures = [m.scaled(1.0, f"{group}:{m.label}") for m in list(mus) + list(nus.values())]
        except Exception as exc:
            rec.run("measure construction", "tf", lambda tol: Outcome(tolerance=tol, detail=f"{type(exc).__name__}: {exc}"))
    for fi, f in enumerate(inst.functions):
        _function_checks(rec, inst, fi, f, measures)
    if measures is not None:
        _measure_checks(rec, inst, *measures, rng)
    _dilation_checks(rec, inst)
    return rec


def thread_count(default: int | None = None) -> int:
    env = os.environ.get("OPSHIFT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return default or min(8, os.cpu_count() or 1)


def plan(cfg: ExperimentConfig) -> list[tuple[str, str, int]]:
    """``(mode, group label, sub-seed)`` for every trial, fixed by the seed."""
    modes = FULL_MODES if cfg.mode == "full" else (cfg.mode,)
    root = SplitMix64(cfg.seed)
    jobs = []
    for mode in modes:
        seeds = root.spawn().sub_seeds(cfg.trials)
        count = 1 if mode in ("counterexample", "custom") else cfg.trials
        for t in range(count):
            jobs.append((mode, f"{mode}#{t}", seeds[t]))
    return jobs


def run_suite(cfg: ExperimentConfig, threads: int | None = None) -> SuiteResult:
    jobs = plan(cfg)

    def work(job):
        mode, group, seed = job
        try:
            inst = generate_instance(cfg, seed, mode)
        except Exception as exc:
            rec = _Recorder(cfg, group)
            rec.run("instance generation", "pathperturb", lambda tol: Outcome(tolerance=tol, detail=f"{type(exc).__name__}: {exc}"))
            return rec
        return run_instance(cfg, inst, group)

    workers = min(thread_count(threads), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            recs = list(pool.map(work, jobs))
    else:
        recs = [work(j) for j in jobs]
    checks = [c for r in recs for c in r.reports]
    measures = [m for r in recs for m in r.measures]
    dilations = [d for r in recs for d in r.dilations]
    return SuiteResult(cfg, checks, measures, dilations)

