"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import time
from fractions import Fraction

import numpy as np

from garo.algebra import BLADE_NAMES, E0, MOTOR, TABLES, Multivector, embed_point
from garo.control import rk4_step
from garo.costs import reach_blades, reach_error, reach_jacobian, tool_line
from garo.dynamics import DynamicsState, forward_dynamics, inverse_dynamics
from garo.experiments import compare_bench, load_config, run_bench, run_ik, run_pointmass, run_reach
from garo.ilqr import ilqr_solve
from garo.kinematics import analytic_jacobian, forward_kinematics, geometric_jacobian
from garo.model import axis_to_plane, load_model
from garo.motors import SERIES_THRESHOLD, exp_bivector, log_jacobian, log_motor, make_rotor, make_translator
from garo.primitives import build_primitive, point_pair_decompose
from garo.targets import normalize, parse_target

import oracles
from oracles import planar_one_link, planar_two_link, riccati_tracking
from test_costs import TARGET_POINTS, empirical_support, fd_jacobian
from test_dynamics import one_link
from test_ilqr import lq_problem

RNG_SEED = 42


def random_screws(rng, n):
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    angle = rng.uniform(0, np.pi, size=(n, 1)) * (1 - 1e-9)
    return np.hstack([axis * angle, rng.uniform(-2, 2, size=(n, 3))])


def random_motors(rng, n):
    # built from translator and rotor factors, independently of exp
    axis = rng.normal(size=(n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    r = make_rotor(axis_to_plane(axis.T).T, rng.uniform(-np.pi, np.pi, size=n) * (1 - 1e-9))
    return (make_translator(rng.uniform(-2, 2, size=(n, 3))) * r).cast(MOTOR)


def test_criterion_01_product_table(criterion):
    start = time.perf_counter()
    oracles.oracle_table.cache_clear()
    oracle = oracles.oracle_table(BLADE_NAMES)
    mismatches = 0
    for i in range(32):
        for j in range(32):
            got = {k: Fraction(v) for k, v in TABLES["gp"][i][j].items() if v != 0}
            mismatches += got != oracle[i][j]
    elapsed = time.perf_counter() - start
    criterion(1, mismatches == 0 and elapsed < 1.0, f"32x32 blade products, {mismatches} mismatches, {elapsed:.3f} s")


def test_criterion_02_exp_log_roundtrip(criterion):
    rng = np.random.default_rng(RNG_SEED)
    b = random_screws(rng, 10_000)
    err_b = np.abs(log_motor(exp_bivector(b)).coeffs - b).max()
    m = random_motors(rng, 10_000)
    # a motor and its negative are the same rigid motion; the log picks m1 >= 0
    m = Multivector(MOTOR, m.coeffs * np.where(m.coeffs[:, :1] < 0, -1.0, 1.0))
    err_m = np.abs(exp_bivector(log_motor(m)).coeffs - m.coeffs).max()
    criterion(2, err_b < 1e-10 and err_m < 1e-10, f"log(exp(B)) {err_b:.2e}, exp(log(M)) {err_m:.2e}")


def test_criterion_03_log_jacobian(criterion):
    rng = np.random.default_rng(RNG_SEED)
    m = random_motors(rng, 3000)
    keep = np.abs(m.coeffs[:, 0]) <= 1 - 1e-6
    keep &= m.coeffs[:, 0] > -0.9  # stay clear of the branch point where the log itself diverges
    m = m[np.flatnonzero(keep)[:1000]]
    h = 1e-6
    worst = 0.0
    jac = log_jacobian(m)
    for k in range(8):
        dp, dm = m.coeffs.copy(), m.coeffs.copy()
        dp[:, k] += h
        dm[:, k] -= h
        fd = (log_motor(Multivector(MOTOR, dp)).coeffs - log_motor(Multivector(MOTOR, dm)).coeffs) / (2 * h)
        worst = max(worst, float(np.abs(jac[:, :, k] - fd).max()))

    def at(m1):
        return log_jacobian(Multivector(MOTOR, np.array([m1, 1e-4, 2e-4, -1e-4, 0.1, 0.2, 0.3, 0.05])))

    jump = max(np.abs(at(SERIES_THRESHOLD - e) - at(SERIES_THRESHOLD + e)).max() for e in (1e-16, 1e-15, 1e-14))
    criterion(3, m.shape[0] == 1000 and worst < 1e-6 and jump < 1e-8, f"{m.shape[0]} motors, FD error {worst:.2e}, series switch jump {jump:.2e}")


def test_criterion_04_jacobian_identity(criterion):
    franka = load_model("franka")
    q = franka.sample_configurations(np.random.default_rng(RNG_SEED), 1000)
    resid = geometric_jacobian(franka, q) + 2.0 * analytic_jacobian(franka, q) * forward_kinematics(franka, q).reverse().expand(-1)
    worst = float(np.abs(resid.dense()).max())
    criterion(4, worst < 1e-10, f"|J^G + 2 J^A ~M| max {worst:.2e} over 1000 configurations")


def test_criterion_05_dynamics(criterion):
    rng = np.random.default_rng(RNG_SEED)
    link1 = one_link()
    planar2 = load_model("planar2")
    franka = load_model("franka")
    i1, i2 = planar2.inertias[:, 1, 1]
    rel1 = rel2 = 0.0
    for q, qd, qdd in rng.uniform(-3, 3, size=(1000, 3)):
        ref = planar_one_link(q, qd, qdd, 3.0, 0.7, 0.3, 9.81)
        rel1 = max(rel1, abs(inverse_dynamics(link1, [q], [qd], [qdd])[0] - ref) / max(abs(ref), 1e-12))
    for q, qd, qdd in rng.uniform(-3, 3, size=(1000, 3, 2)):
        ref = planar_two_link(q, qd, qdd, 2.0, 1.5, 1.0, 0.5, 0.4, i1, i2, 9.81)
        rel2 = max(rel2, np.linalg.norm(inverse_dynamics(planar2, q, qd, qdd) - ref) / np.linalg.norm(ref))
    roundtrip = 0.0
    for q in franka.sample_configurations(rng, 1000):
        qd, qdd = rng.normal(size=(2, 7))
        roundtrip = max(roundtrip, np.abs(forward_dynamics(franka, q, qd, inverse_dynamics(franka, q, qd, qdd)) - qdd).max())
    free = franka.with_gravity(0.0)
    q, qd = franka.sample_configurations(rng, 1)[0], 0.5 * rng.normal(size=7)
    e0 = DynamicsState(free, q, qd).kinetic_energy()
    for _ in range(2000):
        q, qd = rk4_step(free, q, qd, np.zeros(7), 1e-3)
    drift = abs(DynamicsState(free, q, qd).kinetic_energy() - e0) / e0
    ok = rel1 < 1e-8 and rel2 < 1e-8 and roundtrip < 1e-9 and drift < 1e-3
    criterion(5, ok, f"1-link rel {rel1:.1e}, 2-link rel {rel2:.1e}, ID-FD {roundtrip:.1e}, 2 s energy drift {drift:.1e}")


def test_criterion_06_ik(criterion):
    cfg = load_config("ik")
    start = time.perf_counter()
    res = run_ik(cfg)
    elapsed = time.perf_counter() - start
    r = res.report
    ok = r["trials"] == 10_000 and r["seed"] == 42 and res.passed and elapsed <= 60.0
    criterion(
        6,
        ok,
        f"success {r['success_rate']:.2%}, mean iterations {r['mean_iterations']:.2f}, mean cost {r['mean_final_cost']:.2e}, {elapsed:.1f} s",
    )


def test_criterion_07_ilqr_vs_riccati(criterion):
    problem, args = lq_problem(np.random.default_rng(RNG_SEED), horizon=50, dim=6, dt=0.02)
    dev = float(np.abs(ilqr_solve(problem).xs - riccati_tracking(*args)).max())
    criterion(7, dev < 1e-8, f"max state deviation {dev:.2e}")


def test_criterion_08_pointmass_vias(criterion):
    res = run_pointmass(load_config("pointmass"))
    horizon = res.report["horizon"]
    steps = [v["step"] for v in res.report["vias"]]
    errors = [v["error"] for v in res.report["vias"]]
    ok = steps == [horizon // 4, horizon // 2, 3 * horizon // 4, horizon] and max(errors) < 1e-3
    criterion(8, ok, "via errors " + ", ".join(f"{e:.1e}" for e in errors))


def test_criterion_09_reaching_suite(criterion):
    base = load_config("reach")
    finals = {}
    for kind in ("point", "pointpair", "line", "circle", "plane", "sphere"):
        finals[kind] = run_reach(dict(base, target=kind)).report["final_error_norm"]
    pp = point_pair_decompose(parse_target(base["targets"]["pointpair"]).static()).points
    reached = []
    for q1 in (0.6, -0.6):
        q0 = list(base["q0"])
        q0[0] = q1
        rep = run_reach(dict(base, target="pointpair", q0=q0)).report
        d = np.linalg.norm(pp - np.array(rep["final_position"]), axis=1)
        reached.append((int(np.argmin(d)), float(d.min()), rep["final_error_norm"]))
    mirrored = reached[0][0] != reached[1][0] and all(dist < 1e-3 and e < 1e-4 for _, dist, e in reached)
    grasp = run_reach(dict(base, target="grasp")).report["final_blocks"]
    ok = max(finals.values()) < 1e-4 and mirrored and max(grasp.values()) < 1e-3
    detail = ", ".join(f"{k} {v:.1e}" for k, v in finals.items())
    detail += f"; pointpair init q1=+-0.6 -> points {reached[0][0]}/{reached[1][0]}"
    detail += "; grasp " + ", ".join(f"{k} {v:.1e}" for k, v in grasp.items())
    criterion(9, ok, detail)


def test_criterion_10_reach_jacobian_suite(criterion):
    rng = np.random.default_rng(RNG_SEED)
    franka = load_model("franka")
    tools = {"point": E0, "line": tool_line()}
    worst, dims_ok, pairs = 0.0, True, 0
    for tool in tools.values():
        for kind in TARGET_POINTS:
            x_d = normalize(build_primitive(kind, TARGET_POINTS[kind]))
            for q in franka.sample_configurations(rng, 5):
                jac = reach_jacobian(franka, q, tool, x_d)
                fd = fd_jacobian(lambda qq: reach_error(franka, qq, tool, x_d), q)
                worst = max(worst, float(np.abs(jac - fd).max(initial=0.0)))
            dims_ok &= len(reach_blades(tool, x_d)) == empirical_support(tool, x_d, rng)
            pairs += 1
    point = embed_point([0.5, 0.1, 0.4])
    line = build_primitive("line", TARGET_POINTS["line"])
    k_pp = len(reach_blades(E0, point))
    k_lp = len(reach_blades(E0, line))
    ok = worst < 1e-6 and dims_ok and k_pp == 10 and k_lp == 6
    detail = f"{pairs} pairs, FD error {worst:.2e}, supports match: {dims_ok}, point^point K={k_pp} (10), line^point K={k_lp} (criterion asks 6)"
    criterion(10, ok, detail)


def test_criterion_11_benchmark(criterion):
    res = run_bench(load_config("bench"))
    kernels = res.report["kernels"]
    complete = (
        res.report["executions"] == 10_000
        and res.report["repetitions"] == 10
        and len(kernels) == 5
        and all(len(k["samples_ns"]) == 10 for k in kernels.values())
    )

    def scaled(f):
        return {"kernels": {n: {"median_ns": k["median_ns"] * f} for n, k in kernels.items()}}

    same = compare_bench(res.report, scaled(1.0), 0.15)
    inside = compare_bench(res.report, scaled(1 / 1.10), 0.15)
    outside = compare_bench(res.report, scaled(1 / 1.20), 0.15)
    gate = not any(v["regression"] for v in same.values()) and not any(v["regression"] for v in inside.values())
    gate &= all(v["regression"] for v in outside.values())
    medians = ", ".join(f"{n} {k['median_ns'] / 1e3:.0f} us" for n, k in kernels.items())
    criterion(11, complete and gate, f"10000x10 protocol complete: {complete}, gate flags +20% and passes +10%: {gate}; {medians}")
