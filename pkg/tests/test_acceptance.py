"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines.
"""

import time

import numpy as np
import pytest

from test_solver import central_difference_grad, lagrangian_D, make_problem, prox_line_search, random_state
from tgsr.cli import main
from tgsr.evaluation import ConfusionMatrix, accuracy, confusion, macro_f1
from tgsr.predictor import classify_batch, project_simplex
from tgsr.problem import build_augmented_problem, objective_breakdown
from tgsr.solver import SolverOptions, SolverState, _DSystem, solve, update_C, update_D
from tgsr.synthetic import SyntheticSpec, generate

from conftest import random_pair

SEEDS = range(10)


def report(n, ok, detail):
    print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c01_prox_correctness():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst_gap, worst_count_excess = 0.0, -np.inf
    for _ in range(200):
        K, d, C = int(rng.integers(2, 12)), int(rng.integers(1, 5)), int(rng.integers(1, 4))
        kappa = int(rng.integers(1, K + 1))
        st = random_state(rng, K, d, C)
        Cnew, lam = update_C(st, kappa)
        V = st.D - st.P / st.mu
        tau = lam / st.mu
        for i in range(K):
            v = V[i * d:(i + 1) * d]
            c = Cnew[i * d:(i + 1) * d]
            ours = lam * np.linalg.norm(c) + 0.5 * st.mu * np.sum((c - v) ** 2)
            oracle = st.mu * prox_line_search(v, tau)[1]
            worst_gap = max(worst_gap, ours - oracle)
        nnz = int(np.sum(np.linalg.norm(Cnew.reshape(K, d, C), axis=(1, 2)) > 0))
        worst_count_excess = max(worst_count_excess, nnz - kappa)
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-8 and worst_count_excess <= 0 and elapsed < 10
    report(1, ok, f"max excess over oracle {worst_gap:.2e}, max nnz-kappa {worst_count_excess}, {elapsed:.2f}s")


def test_c02_D_update_stationarity():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        K, d = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        while K * d > 60:
            d -= 1
        C, n = int(rng.integers(1, 5)), int(rng.integers(2, 41))
        prob = make_problem(rng, K, d, C, n)
        st = random_state(rng, K, d, C)
        D = update_D(st, prob)
        f = lambda Z: lagrangian_D(Z, st.C, st.P, st.mu, prob.X_tilde, prob.L_tilde)  # noqa: E731
        worst = max(worst, np.abs(central_difference_grad(f, D)).max())
    elapsed = time.perf_counter() - t0
    report(2, worst < 1e-6 and elapsed < 30, f"max |grad| {worst:.2e}, {elapsed:.2f}s")


def test_c03_reduced_vs_direct():
    rng = np.random.default_rng(303)
    worst = 0.0
    for i in range(20):
        K = int(rng.integers(5, 31))
        d = int(rng.integers(2, 21))
        while K * d > 600:
            d -= 1
        if i == 0:
            K, d = 30, 20
        C, n = int(rng.integers(1, 5)), int(rng.integers(2, 51))
        prob = make_problem(rng, K, d, C, n)
        st = random_state(rng, K, d, C)
        Dr = update_D(st, prob, method="reduced")
        Dd = update_D(st, prob, method="direct")
        worst = max(worst, np.linalg.norm(Dr - Dd) / np.linalg.norm(Dd))
    report(3, worst < 1e-8, f"max relative difference {worst:.2e}")


def test_c04_augmentation_identity():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        pair = random_pair(rng, Ns=int(rng.integers(2, 20)), Nt=int(rng.integers(1, 20)), shift=rng.normal())
        xi = float(10 ** rng.uniform(-3, 3))
        Cmat = rng.standard_normal((pair.K * pair.d, pair.C))
        prob = build_augmented_problem(pair, xi)
        lhs = np.sum((prob.L_tilde - Cmat.T @ prob.X_tilde) ** 2)
        b = objective_breakdown(Cmat, pair, xi)
        rhs = b.regression + xi * b.mmd
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    report(4, worst < 1e-10, f"max relative gap {worst:.2e}")


def test_c05_simplex_projection():
    rng = np.random.default_rng(505)
    failures = []
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        v = rng.normal(scale=rng.uniform(0.1, 5), size=n)
        p = project_simplex(v)
        if p.min() < 0 or abs(p.sum() - 1) > 1e-12:
            failures.append(("feasibility", v))
        order = np.argsort(v, kind="stable")
        if np.any(np.diff(p[order]) < 0):
            failures.append(("order", v))
    for _ in range(20):
        v = rng.normal(scale=2, size=4)
        p = project_simplex(v)
        feas = rng.dirichlet(np.ones(4), size=500)
        if np.any(np.linalg.norm(feas - v, axis=1) < np.linalg.norm(p - v) - 1e-12):
            failures.append(("optimality", v))
    hand = project_simplex([0.5, 0.4, -0.1])
    hand_err = np.abs(hand - [0.55, 0.45, 0.0]).max()
    report(5, not failures and hand_err <= 1e-12, f"{len(failures)} failures, hand case error {hand_err:.1e}")


def test_c06_metrics_oracle():
    cm = ConfusionMatrix(np.array([[2, 1], [0, 3]]), ("a", "b"))
    f1_err = abs(macro_f1(cm) - 0.828571)
    acc_err = abs(accuracy(cm) - 5 / 6)
    perfect = confusion([0, 1, 2, 2], [0, 1, 2, 2], 3)
    ok = f1_err <= 1e-6 and acc_err <= 1e-12 and macro_f1(perfect) == 1.0 and accuracy(perfect) == 1.0
    report(6, ok, f"M-F1 error {f1_err:.1e}, ACC error {acc_err:.1e}, perfect "
                  f"{macro_f1(perfect)}/{100 * accuracy(perfect):.0f}%")


@pytest.fixture(scope="module")
def planted_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in SEEDS:
        pair, tl, planted = generate(SyntheticSpec(seed=seed))
        res = solve(build_augmented_problem(pair, 0.0), SolverOptions(kappa=3), track_objective=False)
        preds, _ = classify_batch(res.C_hat, pair.target.data)
        runs.append((macro_f1(confusion(preds, tl.indices, pair.C)), planted, res))
    return runs, time.perf_counter() - t0


def test_c07_planted_recovery(planted_runs):
    runs, elapsed = planted_runs
    good = sum(f1 >= 0.95 and planted <= set(res.selected_groups) for f1, planted, res in runs)
    f1s = ", ".join(f"{f1:.3f}" for f1, _, _ in runs)
    report(7, good >= 9 and elapsed < 120, f"{good}/10 seeds pass (M-F1: {f1s}), {elapsed:.1f}s")


def test_c08_mmd_usefulness():
    xis = (0.01, 0.1, 1.0, 10.0, 100.0)
    wins, lines = 0, []
    for seed in SEEDS:
        pair, tl, _ = generate(SyntheticSpec(seed=seed, shift_magnitude=5.0, noise_sigma=0.5))

        def f1_at(xi):
            res = solve(build_augmented_problem(pair, xi), SolverOptions(kappa=40), track_objective=False)
            preds, _ = classify_batch(res.C_hat, pair.target.data)
            return macro_f1(confusion(preds, tl.indices, pair.C))

        base = f1_at(0.0)
        best = max(f1_at(x) for x in xis)
        wins += best >= base
        lines.append(f"{base:.3f}->{best:.3f}")
    report(8, wins >= 7, f"{wins}/10 seeds with best xi>0 >= xi=0 ({', '.join(lines)})")


def test_c09_cli_determinism(tmp_path):
    def pipeline(root):
        data, fit, grid = root / "data", root / "fit", root / "grid"
        codes = [
            main(["synth", "--K", "21", "--d", "5", "--ns", "50", "--nt", "40", "--planted", "3,12",
                  "--shift", "1", "--noise", "0.3", "--seed", "11", "--out", str(data)]),
            main(["solve", "--manifest", str(data / "manifest.json"), "--kappa", "2", "--xi", "0.5",
                  "--out", str(fit), "--no-plots"]),
            main(["grid-search", "--manifest", str(data / "manifest.json"), "--kappa-values", "1:1:4",
                  "--xi-values", "0,0.1,1", "--out", str(grid), "--no-plots"]),
        ]
        return codes, [fit / "model.tgsr", grid / "grid.csv", grid / "best_model.tgsr"]

    codes_a, files_a = pipeline(tmp_path / "a")
    codes_b, files_b = pipeline(tmp_path / "b")
    same = [fa.read_bytes() == fb.read_bytes() for fa, fb in zip(files_a, files_b)]
    report(9, codes_a == codes_b == [0, 0, 0] and all(same),
           f"exit codes {codes_a}/{codes_b}, identical files {sum(same)}/{len(same)}")


def test_c10_convergence_bookkeeping(planted_runs, tmp_path):
    runs, _ = planted_runs
    feas = [res.feasibility_history[-1] for _, _, res in runs]
    iters = [res.iterations for _, _, res in runs]
    converged_ok = all(f < 1e-6 for f in feas) and max(iters) <= 500 and all(r.converged for _, _, r in runs)

    data = tmp_path / "data"
    main(["synth", "--K", "21", "--d", "5", "--ns", "30", "--nt", "30", "--planted", "3", "--out", str(data)])
    code = main(["solve", "--manifest", str(data / "manifest.json"), "--kappa", "1", "--max-iter", "5",
                 "--epsilon", "1e-15", "--out", str(tmp_path / "fit"), "--no-plots"])
    import json

    header = json.loads((tmp_path / "fit" / "model.tgsr").read_text().splitlines()[1])
    flagged = code == 3 and header["converged"] is False
    report(10, converged_ok and flagged,
           f"max final ||C-D||_inf {max(feas):.1e}, max iterations {max(iters)}, "
           f"non-convergent run exit {code} converged={header['converged']}")
