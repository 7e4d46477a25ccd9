"""The twelve acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS or FAIL line that is printed in the pytest
terminal summary, then asserts the same conditions.
"""

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE
from dyadic.cli import main
from dyadic.core import (ModelParams, ShellField, regime_thresholds, selfsimilar_residual,
                         selfsimilar_residual_scale, stationary_residual,
                         stationary_residual_scale)
from dyadic.odesim import TailClosure, integrate
from dyadic.selfsimilar import (PULLBACK_M, DivergenceProfile, build_selfsimilar,
                                c_growth_check, divergence_classify, find_L_star,
                                ratio_envelope_check, seed_divergence, selfsimilar_sequence,
                                shoot_selfsimilar, sobolev_partial_sums, strong_from_weak)
from dyadic.stationary import (RatioStepParams, backward_ratio_step, build_constant_solution,
                               constant_divergence, constant_sequence, find_unique_constant,
                               forward_ratio_step)

SEED = 20240611


def record(num, checks, detail=""):
    """Store one summary line for criterion ``num`` and assert every check."""
    failed = [name for name, ok in checks.items() if not ok]
    text = detail if not failed else f"{detail}; failed: {', '.join(failed)}"
    ACCEPTANCE[num] = (not failed, text)
    print(f"criterion {num}: {'PASS' if not failed else 'FAIL'} {text}")
    assert not failed, text


@pytest.fixture(scope="module")
def lstar():
    L, w = find_L_star(40, 1e-12)
    a = strong_from_weak(w).copy()
    a[0] = 0.0
    return L, w, a


def test_01_fixed_point_exactness():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        p = ModelParams(beta=rng.uniform(0.1, 3), delta1=rng.uniform(1e-3, 10),
                        delta2=rng.uniform(1e-3, 10))
        rp = RatioStepParams.from_model(p)
        worst = max(worst, abs(forward_ratio_step(1.0, rp) - 1), abs(backward_ratio_step(1.0, rp) - 1))
    record(1, {"fixed point within 1e-14": worst < 1e-14}, f"max |step(1) - 1| = {worst:.2e}")


def test_02_forward_ratio_convergence():
    # parameters drawn as in criterion 1, kept when delta1/delta2 < k1^{-4/3}
    rng = np.random.default_rng(SEED + 2)
    parity_ok = envelope_ok = True
    misses, worst = [], 0.0
    drawn = 0
    while drawn < 50:
        p = ModelParams(beta=rng.uniform(0.1, 3), delta1=rng.uniform(1e-3, 10),
                        delta2=rng.uniform(1e-3, 10))
        if not p.ratio < p.k1 ** (-4 / 3):
            continue
        drawn += 1
        C = rng.uniform(0.1, 10)
        rp = RatioStepParams.from_model(p)
        b = [C]
        for _ in range(200):
            b.append(forward_ratio_step(b[-1], rp))
        b = np.array(b)
        odd, even = b[1::2], b[2::2]
        # iterates that have landed on 1 to rounding carry no parity information
        odd, even = odd[np.abs(odd - 1) > 1e-14], even[np.abs(even - 1) > 1e-14]
        if C < 1:
            parity_ok &= bool(np.all(odd > 1) and np.all(even < 1))
            envelope_ok &= bool(np.all(np.diff(odd) <= 0) and np.all(np.diff(even) >= 0))
        else:
            parity_ok &= bool(np.all(odd < 1) and np.all(even > 1))
            envelope_ok &= bool(np.all(np.diff(odd) >= 0) and np.all(np.diff(even) <= 0))
        err = abs(b[200] - 1)
        worst = max(worst, err)
        if not err < 1e-10:
            misses.append(p.ratio * p.k1 ** (4 / 3))
    detail = f"50 draws, worst |b_200 - 1| = {worst:.2e}"
    if misses:
        detail += (f", {len(misses)} draws above 1e-10 with delta1 k1^(4/3)/delta2 in "
                   f"[{min(misses):.3f}, {max(misses):.3f}]")
    record(2, {"parity oscillation": parity_ok, "monotone envelopes": envelope_ok,
               "|b_200 - 1| < 1e-10": not misses}, detail)


def test_03_backward_confinement():
    rp = RatioStepParams.from_model(ModelParams(delta1=1.0, delta2=1.0))
    checks, errs = {}, []
    for C in (0.5, 2.0):
        x, xs = C, []
        for _ in range(299):
            x = backward_ratio_step(x, rp)
            xs.append(x)
        xs = np.array(xs)
        if C < 1:
            conf = bool(np.all((xs > C) & (xs < 1 / C)))
        else:
            conf = bool(np.all((xs >= xs[0]) & (xs <= C)))
        checks[f"confinement C*={C}"] = conf
        checks[f"|b_1 - 1| < 1e-10 C*={C}"] = abs(xs[-1] - 1) < 1e-10
        errs.append(abs(xs[-1] - 1))
    record(3, checks, f"N=300, |b_1 - 1| = {errs[0]:.1e}, {errs[1]:.1e}")


def test_04_obukhov_dominant_constant():
    p = ModelParams(delta1=0.1, delta2=1.0, forcing=1.0, n_shells=60)
    res, drift = [], []
    for a0 in np.geomspace(0.1, 10, 10):
        s = build_constant_solution(a0, p)
        a = s.values
        res.append(np.max(np.abs(stationary_residual(a, p)) / stationary_residual_scale(a, p)))
        c = s.normalized[40:61]
        drift.append(np.max(np.abs(c - c[-1])) / c[-1])
    record(4, {"residual < 1e-10": max(res) < 1e-10, "K41 drift < 1e-6": max(drift) < 1e-6},
           f"10 values of a_0, max residual {max(res):.1e}, max drift {max(drift):.1e}")


def test_05_kp_dominant_constant():
    p = ModelParams(delta1=1.0, delta2=1.0, forcing=1.0)
    s = find_unique_constant(p)
    root = s.values[0]
    width = s.meta["bracket_width"]
    shells = []
    for f in (1 + 1e-6, 1 - 1e-6):
        d = constant_divergence(constant_sequence(root * f, p, 60), 1.0)
        shells.append(d[0] if d is not None else None)
    kp = find_unique_constant(ModelParams(delta1=1.0, delta2=0.0, forcing=1.0))
    n = np.arange(len(kp))
    ref = 2 ** (-1 / 3) * 2.0 ** (-n / 3)
    kp_err = float(np.max(np.abs(kp.values - ref) / ref))
    record(5, {"bracket < 1e-12 root": width < 1e-12 * root,
               "perturbations diverge before 60": all(x is not None and x < 60 for x in shells),
               "pure KP closed form 1e-12": kp_err < 1e-12 and len(kp) >= 10},
           f"a_0 = {root:.15g}, width/root = {width / root:.1e}, divergence at shells {shells}, "
           f"pure KP error {kp_err:.1e} over {len(kp)} shells")


def test_06_pullback(lstar):
    L, w, a = lstar
    v = w.values
    nondecr = bool(np.all(np.diff(v) >= 0))
    confined = bool(np.all((v >= L - PULLBACK_M) & (v <= L)))
    n = np.arange(20, 41)
    rate3 = np.polyfit(n, np.log2(np.diff(sobolev_partial_sums(a, 0.3))[n - 1]), 1)[0]
    rate4 = np.polyfit(n, np.log2(np.diff(sobolev_partial_sums(a, 0.4))[n - 1]), 1)[0]
    M_ref = float(oracles.pullback_M())
    record(6, {"L* <= M": L <= PULLBACK_M, "M matches series": abs(PULLBACK_M - M_ref) < 1e-15,
               "weak nondecreasing": nondecr, "confined to [L*-M, L*]": confined,
               "w_0 < 1e-6": v[0] < 1e-6,
               "s=0.3 terms decay geometrically": rate3 < 0,
               "s=0.4 terms do not decay": rate4 > 0},
           f"L* = {L:.17g}, w_0 = {v[0]:.1e}, H^s term slopes {rate3:.4f} (s=0.3), "
           f"{rate4:.4f} (s=0.4) bits/shell")


def test_07_kp_uniqueness(lstar):
    _, _, ref = lstar
    kp = ModelParams(delta1=1.0, delta2=0.0)
    a1 = ref[1]
    profiles, slopes = [], []
    for f in (1 + 1e-8, 1 - 1e-8):
        s = selfsimilar_sequence(a1 * f, kp, 40)
        r = ref[:s.size]
        profiles.append(divergence_classify(s, r))
        d = np.log2(s[1:] / r[1:])
        m = np.arange(1, s.size)
        tail = m >= s.size - 16
        so = np.polyfit(m[tail & (m % 2 == 1)], d[tail & (m % 2 == 1)], 1)[0]
        se = np.polyfit(m[tail & (m % 2 == 0)], d[tail & (m % 2 == 0)], 1)[0]
        slopes.append(min(abs(so), abs(se)))
    opposite = set(profiles) == {DivergenceProfile.ODD_UP, DivergenceProfile.EVEN_UP}
    record(7, {"alternating divergence": DivergenceProfile.CONVERGED not in profiles,
               "slope >= 0.05 bits/shell": min(slopes) >= 0.05,
               "opposite parity": opposite},
           f"profiles {[p.value for p in profiles]}, min parity slope {min(slopes):.2f} bits/shell")


def test_08_multi_solution_band():
    p = ModelParams(delta1=0.08, delta2=1.0)
    k1 = p.k1
    checks, notes = {}, []
    for a1 in (0.1, 1.0, 10.0):
        s = build_selfsimilar(a1, p, 300)
        a = s.values
        res = float(np.max(np.abs(selfsimilar_residual(a, p))))
        rel = float(np.max(np.abs(selfsimilar_residual(a, p)) / selfsimilar_residual_scale(a, p)))
        bt = a[300] / a[299] * k1 ** (1 / 3)
        env = ratio_envelope_check(s, p)
        mono, M = c_growth_check(s, p)
        checks[f"a1={a1} residual"] = res < 1e-12 and rel < 1e-12
        checks[f"a1={a1} b_300"] = abs(bt - 1) < 1e-8
        checks[f"a1={a1} envelope"] = env["holds"]
        checks[f"a1={a1} growth"] = mono and 1 < M <= k1 ** 2
        notes.append(f"a1={a1}: res {res:.0e}, |b_300-1| {abs(bt - 1):.0e}, "
                     f"{env['case']} bound {env['max_ratio']:.3f} <= {env['bound']:.3f}, M_fit {M:.2f}")
    record(8, checks, "; ".join(notes))


def test_09_unique_band():
    checks, notes = {}, []
    for d1 in (1.0, 0.5):
        p = ModelParams(delta1=d1, delta2=1.0)
        r = shoot_selfsimilar(p)
        seeds_ok = True
        for f in (1e-4, 0.1, 1.0):
            prof = {seed_divergence(r.root * (1 + f), r, 300),
                    seed_divergence(r.root / (1 + f), r, 300)}
            seeds_ok &= prof == {DivergenceProfile.ODD_UP, DivergenceProfile.EVEN_UP}
        checks[f"d1={d1} bracket < 1e-12 root"] = r.bracket_width < 1e-12 * r.root
        checks[f"d1={d1} residual < 1e-8"] = r.meta["max_residual"] < 1e-8
        checks[f"d1={d1} K41 drift < 1e-4"] = r.meta["k41_drift"] < 1e-4
        checks[f"d1={d1} off-root seeds diverge"] = seeds_ok
        notes.append(f"d1={d1}: root {r.root:.15g}, residual {r.meta['max_residual']:.0e}, "
                     f"drift {r.meta['k41_drift']:.0e}")
    record(9, checks, "; ".join(notes))


def test_10_ode_consistency(lstar):
    rng = np.random.default_rng(SEED + 10)
    N = 20
    # (a) energy drift
    p = ModelParams(n_shells=N)
    tr = integrate(ShellField(rng.uniform(0.05, 1, N + 1), 0.0), p, 1.0, rel_tol=1e-10)
    E = tr.energies()
    drift = abs(E[-1] - E[0]) / E[0]
    # (b), (d) self-similar tracking and energy decay
    _, _, a = lstar
    kp = ModelParams(n_shells=N, delta1=1.0, delta2=0.0)
    tr = integrate(ShellField(a[:N + 1], 0.0), kp, 1.0, rel_tol=1e-12, abs_tol=1e-16,
                   tail=TailClosure.self_similar(a[N + 1], -1.0))
    exact = a[None, 1:N + 1] / (tr.times[:, None] + 1.0)
    track = float(np.max(np.abs(tr.values[:, 1:] - exact) / exact))
    Et = tr.energies() * (tr.times + 1.0) ** 2
    decay = float(np.max(np.abs(Et - Et[0])) / Et[0])
    # (c) forced constant solution
    pc = ModelParams(n_shells=N, delta1=1.0, delta2=1.0, forcing=1.0)
    c = find_unique_constant(pc).values
    tr = integrate(ShellField(c[:N + 1], 0.0), pc, 1.0, rel_tol=1e-12, abs_tol=1e-14,
                   tail=TailClosure.constant(c[N + 1]))
    dev = float(np.max(np.abs(tr.values - c[:N + 1])))
    record(10, {"(a) energy drift < 1e-8": drift < 1e-8, "(b) tracking < 1e-6": track < 1e-6,
                "(c) constant deviation < 1e-7": dev < 1e-7, "(d) E (t-t0)^2 < 1e-6": decay < 1e-6},
           f"(a) {drift:.1e}, (b) {track:.1e}, (c) {dev:.1e}, (d) {decay:.1e}")


def test_11_cross_construction(lstar):
    _, _, a = lstar
    r = shoot_selfsimilar(ModelParams(delta1=1.0, delta2=1e-12))
    rel = abs(r.root - a[1]) / a[1]
    record(11, {"agreement 1e-4": rel < 1e-4},
           f"pull-back a_1 {a[1]:.15g}, shooting {r.root:.15g}, relative gap {rel:.1e}")


def _read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def test_12_cli_sweep(tmp_path):
    args = ["sweep", "--grid", "0.01:2:20,0.01:2:20", "--beta", "1"]
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    codes = [main(args + ["--out", str(o)]) for o in outs]
    header, rows = _read_rows(outs[0])
    col = {h: i for i, h in enumerate(header)}
    well_formed = len(rows) == 400 and all(len(r) == len(header) for r in rows)
    th = regime_thresholds(ModelParams())
    lower, crit, upper = th["selfsimilar_lower"], th["critical"], th["upper"]

    def side(r):
        # intervals [0, 2^-4), [2^-4, 2^-4/3), {2^-4/3}, (2^-4/3, 1], (1, inf)
        if r < lower:
            return 0
        if r < crit:
            return 1
        if r == crit:
            return 2
        return 3 if r <= upper else 4

    ratios = np.array([float(r[col["ratio"]]) for r in rows])
    labels = [(r[col["regime"]], r[col["band"]]) for r in rows]
    order = np.argsort(ratios, kind="stable")
    changes_exact = True
    for i, j in zip(order[:-1], order[1:]):
        differ = labels[i] != labels[j]
        crosses = side(ratios[i]) != side(ratios[j])
        changes_exact &= differ == crosses
    by_side = {}
    for r, lab in zip(ratios, labels):
        by_side.setdefault(side(r), set()).add(lab)
    consistent = all(len(v) == 1 for v in by_side.values())
    identical = outs[0].read_bytes() == outs[1].read_bytes()
    record(12, {"exit 0": codes == [0, 0], "400 well-formed rows": well_formed,
                "tags change exactly at thresholds": changes_exact and consistent,
                "bit-identical rerun": identical},
           f"{len(rows)} rows, {len(by_side)} threshold intervals occupied, rerun identical {identical}")
