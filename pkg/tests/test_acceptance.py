"""End-to-end acceptance checks.

Each test prints a single pass line on success; assertion failures identify
the violated criterion. Tolerances are fixed here and deliberately not
imported from the library under test.
"""

import io
import time

import numpy as np
import pytest

from robustcert import cli
from robustcert.certify import certify, certify_all, multiplier_objective
from robustcert.eigen import symmetric_eigenvalues
from robustcert.lmi import (
    Case,
    InnerProductVector,
    build_A,
    build_B,
    build_feasibility_systems,
)
from robustcert.model import (
    Kind,
    MarketEstimates,
    ProblemInstance,
    UncertaintySpec,
    make_diagonal_shifts,
    validate_portfolio,
)
from robustcert.oracle import worst_case_return, worst_case_sampled
from robustcert.solver import Status, frontier, solve_nominal


def random_portfolio(rng, n):
    w = rng.random(n) + 1e-3
    return validate_portfolio(w / w.sum())


def random_spec(rng, kind, n):
    radii = {
        Kind.BOX: {"delta_b": float(rng.random() + 0.1)},
        Kind.ELLIPSOIDAL: {"delta_e": float(rng.random() + 0.1)},
        Kind.POLYHEDRAL: {"delta_p": float(rng.random() + 0.1)},
        Kind.BOX_ELLIPSOIDAL: {
            "delta_b": float(rng.random() + 0.1),
            "delta_e": float(rng.random() + 0.1),
        },
        Kind.BOX_POLYHEDRAL: {
            "delta_b": float(rng.random() + 0.1),
            "delta_p": float(rng.random() + 0.1),
        },
        Kind.ELLIPSOIDAL_POLYHEDRAL: {
            "delta_e": float(rng.random() + 0.1),
            "delta_p": float(rng.random() + 0.1),
        },
    }[kind]
    mu0 = rng.random(n) * 0.25 + 0.05
    mags = rng.random(n) * 0.06
    return UncertaintySpec(
        kind=kind, mu0=mu0, shifts=make_diagonal_shifts(mags), **radii
    )


def test_criterion_1_ellipsoidal_biconditional():
    rng = np.random.default_rng(101)
    start = time.monotonic()
    checked = 0
    while checked < 200:
        n = int(rng.integers(1, 9))
        spec = random_spec(rng, Kind.ELLIPSOIDAL, n)
        x = random_portfolio(rng, n)
        wc = worst_case_return(x, spec).value
        if wc < 0.0:
            continue
        tau = float(wc * (0.5 + rng.random()))
        if tau <= 0.0 or abs(wc - tau) <= 1e-6:
            continue
        est = MarketEstimates(spec.mu0, np.eye(n))
        systems = build_feasibility_systems(x, ProblemInstance(est, tau, spec))
        verdict = certify_all(systems)
        assert verdict.feasible == (wc >= tau), (
            f"verdict {verdict.feasible} vs oracle {wc} >= {tau}"
        )
        checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"took {elapsed:.1f}s"
    print(f"criterion 1 (ellipsoidal biconditional, 200/200, {elapsed:.2f}s): PASS")


def test_criterion_2_soundness_all_geometries():
    kinds = (
        Kind.BOX,
        Kind.POLYHEDRAL,
        Kind.BOX_ELLIPSOIDAL,
        Kind.BOX_POLYHEDRAL,
        Kind.ELLIPSOIDAL_POLYHEDRAL,
    )
    rng = np.random.default_rng(102)
    start = time.monotonic()
    feasible_counts = {}
    for kind in kinds:
        feasible = 0
        for i in range(500):
            n = int(rng.integers(1, 7))
            spec = random_spec(rng, kind, n)
            x = random_portfolio(rng, n)
            tau = float((spec.mu0 @ x.x) * (0.2 + 0.9 * rng.random()))
            est = MarketEstimates(spec.mu0, np.eye(n))
            systems = build_feasibility_systems(x, ProblemInstance(est, tau, spec))
            if not certify_all(systems).feasible:
                continue
            feasible += 1
            sampled = worst_case_sampled(x, spec, samples=10_000, seed=i).value
            if sampled >= 0.0:
                assert sampled >= tau - 1e-6, (
                    f"{kind.value}: certified but sampled {sampled} < {tau}"
                )
        feasible_counts[kind.value] = feasible
        assert feasible > 0, f"no feasible instance drawn for {kind.value}"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    print(
        "criterion 2 (soundness, 500 instances x 5 geometries, "
        f"feasible {feasible_counts}, {elapsed:.1f}s): PASS"
    )


def test_criterion_3_hand_verified_certificates():
    b = build_B(Kind.ELLIPSOIDAL, 1)

    a = build_A(InnerProductVector(np.array([2.0, 1.0])), 1.0)
    sys1 = build_feasibility_systems(
        validate_portfolio([1.0]),
        ProblemInstance(
            MarketEstimates(np.array([2.0]), np.eye(1)),
            1.0,
            UncertaintySpec(
                kind=Kind.ELLIPSOIDAL,
                mu0=np.array([2.0]),
                shifts=make_diagonal_shifts([1.0]),
                delta_e=1.0,
            ),
        ),
    )[0]
    np.testing.assert_array_equal(sys1.a, a)
    np.testing.assert_array_equal(sys1.b, b)
    cert = certify(sys1)
    assert cert.feasible
    assert abs(cert.lambda_star - 1.0) <= 1e-6
    assert abs(cert.min_eig_at_lambda) <= 1e-7

    sys2 = build_feasibility_systems(
        validate_portfolio([1.0]),
        ProblemInstance(
            MarketEstimates(np.array([1.0]), np.eye(1)),
            1.0,
            UncertaintySpec(
                kind=Kind.ELLIPSOIDAL,
                mu0=np.array([1.0]),
                shifts=make_diagonal_shifts([1.0]),
                delta_e=1.0,
            ),
        ),
    )[0]
    cert2 = certify(sys2)
    assert not cert2.feasible
    assert cert2.min_eig_at_lambda <= -0.5
    print("criterion 3 (hand-verified certificates): PASS")


def test_criterion_4_structural_identities():
    rng = np.random.default_rng(104)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        x = random_portfolio(rng, n)
        mu0 = rng.standard_normal(n)
        mags = rng.random(n)
        tau = float(rng.standard_normal())
        est = MarketEstimates(mu0, np.eye(n))

        def systems(kind, **radii):
            spec = UncertaintySpec(
                kind=kind, mu0=mu0, shifts=make_diagonal_shifts(mags), **radii
            )
            return build_feasibility_systems(x, ProblemInstance(est, tau, spec))

        # intersection-with-polyhedral system is the plain ellipsoidal one
        [ep] = systems(Kind.ELLIPSOIDAL_POLYHEDRAL, delta_e=0.4, delta_p=0.9)
        [el] = systems(Kind.ELLIPSOIDAL, delta_e=0.4)
        np.testing.assert_array_equal(ep.a, el.a)
        np.testing.assert_array_equal(ep.b, el.b)

        # Case-II combined systems reduce to their single-set counterparts
        [be] = systems(Kind.BOX_ELLIPSOIDAL, delta_b=10.0, delta_e=0.4)
        assert be.label.case is Case.II
        np.testing.assert_array_equal(be.a, el.a)
        np.testing.assert_array_equal(be.b, el.b)

        [bp] = systems(Kind.BOX_POLYHEDRAL, delta_b=10.0, delta_p=0.9)
        [po] = systems(Kind.POLYHEDRAL, delta_p=0.9)
        assert bp.label.case is Case.II
        np.testing.assert_array_equal(bp.a, po.a)
        np.testing.assert_array_equal(bp.b, po.b)

        # every built A is rank-2 at most
        all_systems = (
            [ep, el, be, bp, po]
            + systems(Kind.BOX, delta_b=0.5)
            + systems(Kind.BOX_ELLIPSOIDAL, delta_b=0.01, delta_e=5.0)
            + systems(Kind.BOX_POLYHEDRAL, delta_b=0.01, delta_p=5.0)
        )
        for s in all_systems:
            if s.n >= 2:
                mags_sorted = np.sort(np.abs(np.linalg.eigvalsh(s.a)))[::-1]
                assert mags_sorted[2] <= 1e-10 * max(np.linalg.norm(s.a), 1.0)
    print("criterion 4 (structural identities, 100 inputs): PASS")


def test_criterion_5_eigen_kernel():
    rng = np.random.default_rng(105)

    def closed_form(m):
        n = m.shape[0]
        if n == 2:
            tr = m[0, 0] + m[1, 1]
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            d = np.sqrt(max(tr * tr - 4.0 * det, 0.0))
            return np.sort([(tr - d) / 2.0, (tr + d) / 2.0])
        q = np.trace(m) / 3.0
        b = m - q * np.eye(3)
        p = np.sqrt(max(np.trace(b @ b) / 6.0, 0.0))
        if p == 0.0:
            return np.full(3, q)
        phi = np.arccos(np.clip(np.linalg.det(b / p) / 2.0, -1.0, 1.0)) / 3.0
        ang = phi + np.array([0.0, 2.0, 4.0]) * np.pi / 3.0
        return np.sort(q + 2.0 * p * np.cos(ang))

    for i in range(1000):
        n = 2 if i % 2 == 0 else 3
        m = rng.standard_normal((n, n))
        m = m + m.T
        vals = symmetric_eigenvalues(m)
        np.testing.assert_allclose(vals, closed_form(m), atol=1e-8)
        assert abs(vals.sum() - np.trace(m)) <= 1e-9 * (1.0 + np.linalg.norm(m))
        assert vals.prod() == pytest.approx(np.linalg.det(m), rel=1e-7, abs=1e-9)
    print("criterion 5 (eigen kernel vs closed forms, 1000 matrices): PASS")


def test_criterion_6_concavity():
    rng = np.random.default_rng(106)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        v = InnerProductVector(rng.standard_normal(n + 1))
        kind = rng.choice([Kind.ELLIPSOIDAL, Kind.POLYHEDRAL])
        a = build_A(v, float(rng.standard_normal()))
        b = build_B(Kind(kind), n)
        from robustcert.lmi import FeasibilitySystem, SystemLabel

        label = SystemLabel(
            kind=Kind(kind), case=None, box_index=None, nominal_scale=1.0,
            tau_scale=1.0, scaled_v=v.v, offset=0.0,
        )
        s = FeasibilitySystem(a, b, label)
        l1, l2 = np.sort(rng.random(2) * 10.0)
        mid = multiplier_objective(s, 0.5 * (l1 + l2))
        assert mid >= min(
            multiplier_objective(s, l1), multiplier_objective(s, l2)
        ) - 1e-9
    print("criterion 6 (concavity of the multiplier objective, 1000 triples): PASS")


def test_criterion_7_qp_solver():
    rng = np.random.default_rng(107)

    def grid(n):
        k = 1000
        if n == 2:
            a = np.arange(k + 1) / k
            return np.column_stack([a, 1.0 - a])
        i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
        keep = i + j <= k
        return np.column_stack(
            [i[keep] / k, j[keep] / k, (k - i[keep] - j[keep]) / k]
        )

    for n in (2, 3):
        pts = grid(n)
        for _ in range(3):
            m = rng.standard_normal((n + 1, n))
            sigma = m.T @ m / n
            mu = rng.random(n) * 0.2
            tau = float(0.4 * mu.min() + 0.6 * mu.max())
            res = solve_nominal(MarketEstimates(mu, sigma), tau)
            assert res.status is Status.OPTIMAL
            assert res.kkt_residual <= 1e-6
            ok = pts[pts @ mu >= tau - 1e-12]
            best = float(np.min(np.einsum("ij,jk,ik->i", ok, sigma, ok)))
            assert res.variance <= best + 1e-5

    est = MarketEstimates(
        np.array([0.08, 0.12, 0.15]),
        np.array([[0.04, 0.01, 0.0], [0.01, 0.05, 0.015], [0.0, 0.015, 0.09]]),
    )
    spec = UncertaintySpec(
        kind=Kind.ELLIPSOIDAL, mu0=est.mu,
        shifts=make_diagonal_shifts([0.01, 0.012, 0.008]), delta_e=1.0,
    )
    pts = frontier(est, spec, [0.08, 0.10, 0.12, 0.13, 0.14])
    by_tau = {}
    for p in pts:
        by_tau.setdefault(p.tau, {})[p.robust] = p
    for pair in by_tau.values():
        if all(p.status is Status.OPTIMAL for p in pair.values()):
            assert pair[True].variance >= pair[False].variance - 1e-9
    for robust in (False, True):
        seq = [p.variance for p in pts
               if p.robust is robust and p.status is Status.OPTIMAL]
        assert all(b >= a - 1e-9 for a, b in zip(seq, seq[1:]))
    print("criterion 7 (QP vs grid search, KKT, frontier dominance): PASS")


def test_criterion_8_estimation_formulas(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("x,y\n0.1,0.2\n0.3,0.4\n", encoding="utf-8")
    out = io.StringIO()
    parser = cli.build_parser()
    args = parser.parse_args(["estimate", "--data", str(p)])
    assert args.func(args, out) == 0
    import json

    report = json.loads(out.getvalue())
    assert report["mu"] == [(0.1 + 0.3) / 2.0, (0.2 + 0.4) / 2.0]
    expected = ((0.1 - 0.2) * (0.1 - 0.2) + (0.3 - 0.2) * (0.3 - 0.2)) / 2.0
    for row in report["sigma"]:
        for entry in row:
            assert entry == pytest.approx(expected, abs=1e-15)
    print("criterion 8 (estimation formulas on the toy dataset): PASS")


def test_criterion_9_determinism(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text("x,y\n0.1,0.2\n0.3,0.4\n", encoding="utf-8")

    def run(argv):
        out = io.StringIO()
        parser = cli.build_parser()
        args = parser.parse_args(argv)
        args.func(args, out)
        return out.getvalue()

    check_argv = [
        "check", "--data", str(p), "--kind", "box-ellipsoidal",
        "--shift-mags", "0.02,0.03", "--delta-b", "0.5", "--delta-e", "1.0",
        "--weights", "0.4,0.6", "--tau", "0.1", "--seed", "11",
    ]
    frontier_argv = [
        "frontier", "--data", str(p), "--kind", "ellipsoidal",
        "--shift-mags", "0.02,0.03", "--delta-e", "1.0",
        "--tau-grid", "0.1:0.3:0.05", "--seed", "11",
    ]
    assert run(check_argv) == run(check_argv)
    assert run(frontier_argv) == run(frontier_argv)
    print("criterion 9 (byte-identical repeated runs): PASS")
