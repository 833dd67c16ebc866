"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runs at full scale (n_reps = 10^5 for the shipped scenarios). Run on its own
with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from certdec import adoption, asif, cli, config, sim  # noqa: E402
from certdec.confset import (GaussianErrors, WinnersData, box_set, critical_value,  # noqa: E402
                             lower_bound_set, projection_box)
from certdec.core import ParamGrid, winners_loss  # noqa: E402

WINNERS_CONFIGS = ("winners", "winners_equal", "winners_correlated")
TREATMENT_CONFIGS = ("treatment", "treatment_marginal")

pytestmark = pytest.mark.slow


def scenario(name, *overrides):
    return config.load(cli.resolve_config(name), overrides)


@functools.lru_cache(maxsize=None)
def winners_run(name):
    s = scenario(name)
    return s, sim.simulate_winners(s)


@functools.lru_cache(maxsize=None)
def treatment_run(name):
    s = scenario(name)
    return s, sim.simulate_treatment(s)


def announce(number, passed, detail, capsys=None):
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    if capsys is None:
        print(line, flush=True)
    else:
        with capsys.disabled():
            print(f"\n{line}", flush=True)
    return passed


# -- criteria -------------------------------------------------------------------

def criterion_1():
    s, d = winners_run("winners")
    theta = np.asarray(s.theta)
    certs = {"projection": (d["ewm"], d["R_proj"]), "studentized": (d["ewm"], d["R_stud"]),
             "risk_aware": (d["ra_act"], d["R_ra"]),
             "inversion_trivial": (d["inv_triv_act"], d["R_inv_triv"])}
    rates = {k: float(np.mean(1 - theta[a] <= R)) for k, (a, R) in certs.items()}
    ok = all(r >= 0.95 - 0.0021 for r in rates.values())
    return ok, "coverage " + ", ".join(f"{k}={v:.4f}" for k, v in rates.items()) + \
        " (need >= 0.9479)"


def criterion_2():
    worst = []
    ok = True
    for alpha in (0.05, 0.1):
        for C in (0.3, 0.5, 0.7):
            rep = sim.audit_adoption(alpha, C, u=1.0, n=100_000, seed=1)
            ok &= rep.passed and len(rep.checks) == 2
            gap = rep.metric("saturation_risk").value - rep.value("risk_bound")
            worst.append(f"({alpha},{C}): excess-3se={rep.checks[0].statistic:+.4f} "
                         f"sat_gap={gap:+.5f}")
    return ok, "; ".join(worst)


def criterion_3():
    details, ok = [], True
    for name in WINNERS_CONFIGS:
        s, d = winners_run(name)
        theta = np.asarray(s.theta)
        for tag, act, R in (("projection", d["ewm"], d["R_proj"]),
                            ("studentized", d["ewm"], d["R_stud"]),
                            ("risk_aware", d["ra_act"], d["R_ra"]),
                            ("inversion_trivial", d["inv_triv_act"], d["R_inv_triv"])):
            L = 1 - theta[act]
            realized = np.where(R <= s.C, L, s.C)
            excess, se = sim.mean_se(realized - np.minimum(R, s.C))
            ok &= excess - s.alpha <= 3 * se
            details.append(excess - s.alpha - 3 * se)
    return ok, f"max over configs/certificates of E[loss]-alpha-E[min(R,C)]-3se = " \
        f"{max(details):+.5f} (need <= 0)"


def criterion_4():
    counts, ok = {}, True
    for name in WINNERS_CONFIGS:
        s, d = winners_run(name)
        for challenger, act_t, R_t in (("trivial", d["triv_act"], d["R_triv"]),
                                       ("studentized", d["ewm"], d["R_stud"])):
            _, R = asif.winners_inversion_batch(act_t, R_t)
            n_bad = int(np.sum(R > R_t))
            counts[f"{name}/{challenger}"] = n_bad
            ok &= n_bad == 0
    return ok, "violations " + ", ".join(f"{k}={v}" for k, v in counts.items())


def criterion_5():
    parts, ok = [], True
    for name in WINNERS_CONFIGS:
        s, d = winners_run(name)
        viol = int(np.sum(d["R_ra"] > d["R_stud"]))
        differ = int(np.sum(d["ra_act"] != d["ewm"]))
        ok &= viol == 0
        if len(set(s.sigma)) > 1:
            ok &= differ >= 1
        parts.append(f"{name}: violations={viol} differ={differ}")
    return ok, "; ".join(parts)


def criterion_6():
    parts, ok = [], True
    for name in TREATMENT_CONFIGS:
        s, d = treatment_run(name)
        spec = d["spec"]
        losses = np.array([float(spec.fn(a, np.array([[s.theta[0]]]))[0])
                           for a in range(spec.n_actions)])
        valid = float(np.mean(losses[d["act"]] <= d["R"]))
        mismatch = int(np.sum((d["R"] <= s.C) != (d["theta_hat"] > d["theta_bar"])))
        _, _, worst = sim.upper_tail_dominance(d["R"], d["R_triv"],
                                               sim.treatment_r_grid(s, spec))
        ok &= valid >= 0.95 - 0.0021 and mismatch == 0 and worst <= 0
        parts.append(f"{name}: valid={valid:.4f} theta_bar={d['theta_bar']:.9f} "
                     f"mismatches={mismatch} max(tail diff-3se)={worst:+.5f}")
    return ok, "; ".join(parts)


def criterion_7():
    parts, ok = [], True
    wanted = {"e_ratio", "e_adoption_risk", "edominate_violations", "trunc_max_ratio",
              "trunc_adoption_risk", "r_positive"}
    for gamma in (0.5, 1.0):
        rep = sim.run_ecert(scenario("ecert", f"gamma={gamma}"))
        checks = {c.name: c for c in rep.checks if c.name in wanted}
        ok &= set(checks) == wanted and all(c.passed for c in checks.values())
        parts.append(f"gamma={gamma}: E[L/R]={rep.value('e_ratio_mean'):.4f} "
                     f"risk={rep.value('mean_realized_risk.eposterior'):.4f}<=2C "
                     f"E[max(L/R,1)]={rep.value('trunc_max_ratio_mean'):.4f} "
                     f"trunc_risk={rep.value('mean_realized_risk.truncated'):.4f} "
                     f"inversion_violations={int(rep.value('edominate_violations'))}")
    return ok, "; ".join(parts)


def criterion_8():
    alpha, u = 0.05, 1.0
    rng = np.random.default_rng(8)
    ok, dist = True, 0.0
    for C in (0.3, 0.5, 0.7):
        r = adoption.threshold_rule(C, u).r_grid
        for _ in range(5):
            # above C the mean loss exceeds C; below C it is at most r, as a valid
            # certificate would report
            m = np.where(r > C, rng.uniform(C + 1e-6, 1.0, r.size), r * rng.uniform(0, 1, r.size))
            p = rng.uniform(0.01, 1, r.size)
            rule = adoption.optimal_adoption(adoption.PriorSummary(r, m, p / p.sum()),
                                             u, alpha, C)
            d = float(np.max(np.abs(rule.q - adoption.threshold_rule(C, u).q)))
            dist = max(dist, d)
            ok &= d == 0.0
    C = 0.5
    worst_lemma, gaps = 0.0, []
    for r0 in (0.55, 0.7, 0.9):
        r = adoption.unit_grid(extra=[C, r0])
        p = (r == r0).astype(float)
        prior = adoption.PriorSummary(r, np.zeros_like(r), p)
        rule = adoption.optimal_adoption(prior, u, alpha, C)
        obj = adoption.bayes_objective(rule.q, prior, C)
        base = adoption.bayes_objective(np.where(r <= C, u, 0.0), prior, C)
        lemma = adoption.lemma_worst_case(rule, alpha, C)
        worst_lemma = max(worst_lemma, lemma - u * alpha * (1 - C))
        ok &= obj <= base and lemma <= u * alpha * (1 - C) + 1e-9
        gaps.append(f"r0={r0}: obj={obj:.5f} vs {base:.5f}")
    return ok, f"threshold sup-distance={dist}; " + "; ".join(gaps) + \
        f"; lemma - u*alpha*(1-C) <= {worst_lemma:.2e}"


def _box_grid(lower, rng):
    axes = [sorted({0.0, 1.0, float(np.clip(lb, 0, 1))} | set(rng.uniform(0, 1, 6).tolist()))
            for lb in lower]
    return ParamGrid.product(axes)


def criterion_9():
    rng = np.random.default_rng(9)
    err = {"box": 0.0, "studentized": 0.0, "treatment": 0.0}
    mismatched_actions = 0
    spec3 = winners_loss(3)
    for _ in range(300):
        X = rng.uniform(-0.2, 1.2, 3)
        sigma = rng.uniform(0.02, 0.4, 3)
        c_star = rng.uniform(0.5, 3.0)
        data = WinnersData(X, sigma)
        lower = X - sigma * c_star
        grid = _box_grid(lower, rng)
        assert len(grid) <= 10_000
        d = asif.asif_decide(box_set(lower, 0.95, "studentized_projection"), spec3, grid)
        act, R, _ = asif.box_asif_batch(lower[None, :])
        err["box"] = max(err["box"], abs(R[0] - d.risk_bound))
        mismatched_actions += int(act[0] != d.action)
        if np.all(lower <= 1):
            certs = asif.projection_certificates(data, 0.05, 0, 0, critical_values=(0.1, c_star))
            ewm = certs["studentized"].action
            sup = asif.worst_case_loss(ewm, projection_box(data, c_star, True), spec3, grid)
            err["studentized"] = max(err["studentized"],
                                     abs(sup - certs["studentized"].risk_bound))
            mismatched_actions += int(ewm != int(np.argmax(X)))
    tspec = scenario("treatment").loss()
    for theta_hat in rng.uniform(-0.3, 1.3, 300):
        grid = ParamGrid(sorted({0.0, 1.0, float(np.clip(theta_hat, 0, 1))}
                                | set(rng.uniform(0, 1, 200).tolist())))
        d = asif.asif_decide(lower_bound_set(theta_hat, 0.95), tspec, grid)
        act, R, _ = asif.monotone_asif_batch(tspec, [theta_hat], 0.0, 1.0)
        err["treatment"] = max(err["treatment"], abs(R[0] - d.risk_bound))
        mismatched_actions += int(act[0] != d.action)
    c1 = critical_value([1.0], GaussianErrors(1), 0.05, 1_000_000, seed=91, studentized=True)
    c2 = critical_value([1.0, 1.0], GaussianErrors(2), 0.05, 1_000_000, seed=92,
                        studentized=True)
    q1 = oracles.max_of_iid_normals_quantile(1, 0.95)
    q2 = oracles.max_of_iid_normals_quantile(2, 0.95)
    ok = (max(err.values()) <= 1e-12 and mismatched_actions == 0
          and abs(c1 - q1) <= 0.01 and abs(c2 - q2) <= 0.01)
    return ok, (", ".join(f"{k} max|err|={v:.1e}" for k, v in err.items())
                + f", action mismatches={mismatched_actions}"
                + f", c1={c1:.4f} (oracle {q1:.4f}), c2={c2:.4f} (oracle {q2:.4f})")


def criterion_10(tmp_root: Path):
    same = {}
    for name in cli.shipped_configs():
        outs = []
        for workers in (1, 4):
            out = tmp_root / f"{name}-{workers}"
            cli.main(["run", name, "--out", str(out), "--workers", str(workers)])
            outs.append((out / "report.csv").read_bytes())
        same[name] = outs[0] == outs[1] and len(outs[0]) > 0
    return all(same.values()), "byte-identical: " + ", ".join(
        f"{k}={v}" for k, v in same.items())


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    assert announce(number, ok, detail, capsys), detail


def test_criterion_10(tmp_path, capsys):
    ok, detail = criterion_10(tmp_path)
    assert announce(10, ok, detail, capsys), detail


if __name__ == "__main__":
    import tempfile

    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        results.append(announce(k, *fn()))
    with tempfile.TemporaryDirectory() as tmp:
        import contextlib
        import io
        with contextlib.redirect_stdout(io.StringIO()):
            ok, detail = criterion_10(Path(tmp))
        results.append(announce(10, ok, detail))
    sys.exit(0 if all(results) else 1)
