import json

import numpy as np
import pytest

from recordwalk import samplers as S
from recordwalk import verify as V
from recordwalk.seq import (IncrementDistribution, offspring_law, parse_offspring, sample_window,
                            two_point)

POS = two_point(0.4, 0.6)
ZERO = two_point(0.5, 0.5)
NEG = two_point(0.6, 0.4)


def _budget():
    return S.SamplerBudget(node_cap=50_000, height_cap=64)


# ---------------------------------------------------------------------------
# Empirical laws, TV and chi-square


def test_tv_trivial_cases():
    a = V.EmpiricalDistribution.from_samples("aab")
    assert V.tv_distance(a, a) == 0
    assert V.tv_distance(a, {"c": 1.0}) == pytest.approx(1.0)
    assert V.tv_distance(a, {"a": 2 / 3, "b": 1 / 3}) == pytest.approx(0.0)
    b = V.EmpiricalDistribution.from_samples("ab")
    assert V.tv_distance(a, b) == pytest.approx(1 / 6)


def test_tv_refuses_mismatched_schemas():
    with pytest.raises(ValueError):
        V.tv_distance(V.EmpiricalDistribution("x", {1: 1}), V.EmpiricalDistribution("y", {1: 1}))


def test_empirical_rows():
    e = V.EmpiricalDistribution("k", {1: 3, 2: 1})
    assert e.total == 4 and len(e) == 2
    assert e.rows({1: 0.5, 3: 0.5}) == [(1, 3, 2.0), (2, 1, 0.0), (3, 0, 2.0)]
    f = V.EmpiricalDistribution("k", {2: 5})
    assert V.paired_rows(e, f) == [(1, 3, 0), (2, 1, 5)]


def test_chi_square_pass_and_fail(rng):
    ref = {0: 0.2, 1: 0.3, 2: 0.5}
    keys = rng.choice(3, size=20_000, p=[0.2, 0.3, 0.5])
    good = V.EmpiricalDistribution.from_samples(keys.tolist())
    assert V.chi_square_gof(good, ref).statistic > 1e-4
    bad = V.EmpiricalDistribution.from_samples(rng.choice(3, size=20_000, p=[0.25, 0.25, 0.5]).tolist())
    rep = V.chi_square_gof(bad, ref)
    assert not rep.passed and rep.details["dof"] == 2


def test_chi_square_rejects_keys_outside_support():
    ref = {0: 0.5, 1: 0.5}
    rep = V.chi_square_gof(V.EmpiricalDistribution("k", {0: 500, 1: 400, 7: 100}), ref)
    assert not rep.passed and rep.details["outside_support"] == 100
    # with leftover reference mass, foreign keys share its bin
    rep = V.chi_square_gof(V.EmpiricalDistribution("k", {0: 450, 1: 450, 7: 100}), {0: 0.45, 1: 0.45})
    assert rep.passed


def test_chi_square_errors():
    with pytest.raises(ValueError):
        V.chi_square_gof(V.EmpiricalDistribution(), {0: 1.0})
    with pytest.raises(ValueError):
        V.chi_square_gof(V.EmpiricalDistribution("k", {0: 100}), {0: 1.0})


def test_report_json_and_line():
    rep = V.TestReport("x", 0.5, 1.0, True, 10, seed=3,
                       details={"k": np.int64(2), (1, 2): np.float64(0.5), "b": b"(*)"})
    js = json.loads(json.dumps(rep.to_json()))
    assert js["details"] == {"k": 2, "(1, 2)": 0.5, "b": "(*)"}
    assert rep.line().startswith("PASS x: statistic=0.5")


# ---------------------------------------------------------------------------
# Checks at small sizes


def test_escalate_grows_until_resolved(rng):
    def need(w):
        if len(w) < 200:
            raise V.CensoredError(0)
        return len(w)

    val, w = V.escalate(ZERO, rng, need, -8, 8)
    assert val >= 200 and val == len(w)
    val, _ = V.escalate(ZERO, rng, need, -8, 8, max_len=64)
    assert val is None


def test_hitting_powers_small(rng):
    rep = V.check_hitting_powers(POS, 3, 5000, seed=1)
    assert rep.passed, rep.line()
    assert [row[0] for row in rep.details["table"]] == [1, 2, 3]
    with pytest.raises(ValueError):
        V.check_hitting_powers(ZERO, 2, 10)


def test_tau_joint_law_small():
    # [DERIVED] positive drift: 0.6 + 0.6 c = 1 with c = 2/3, so tau is finite
    ref = V.tau_joint_law(POS)
    assert ref == pytest.approx({(0, 1): 0.4, (1, 1): 0.6})
    # [DERIVED] negative drift: P[tau < inf] = E[X] + 1 = 0.8
    assert sum(V.tau_joint_law(NEG).values()) == pytest.approx(0.8)
    for d, seed in ((POS, 2), (NEG, 3)):
        assert V.check_tau_joint_law(d, 5000, seed=seed).passed


def test_parent_probability_small():
    rep = V.check_parent_probability(NEG, 5000, seed=4)
    assert rep.passed and rep.details["m"] == pytest.approx(0.8)
    with pytest.raises(ValueError):
        V.check_parent_probability(POS, 10)


@pytest.mark.parametrize("d", [NEG, ZERO, POS])
def test_phase_small(d):
    # certifying margins need windows well beyond their own length
    rep = V.check_phase(d, 1000, 200, seed=5)
    assert rep.passed, rep.line()


def test_dn_small():
    rep = V.check_dn_radon_nikodym(ZERO, [1], 1, 3000, seed=6, patterns=V.DN_PATTERNS,
                                   z_threshold=3.0)
    assert rep.passed, rep.line()


def test_fprob_small():
    even = parse_offspring("0:0.5,2:0.5")
    b = _budget()
    rep = V.check_fprob_limit(lambda g: (S.sample_egwt(even, b, g), 0),
                              lambda g: (S.sample_ekt(even, b, g), 0), 1, 4, 3000, seed=7,
                              threshold=0.05)
    assert rep.passed, rep.line()


def test_fprob_reports_shallow_truncation():
    even = parse_offspring("0:0.5,2:0.5")
    b = S.SamplerBudget(node_cap=1000, height_cap=2)
    with pytest.raises(ValueError):
        V.check_fprob_limit(lambda g: (S.sample_egwt(even, b, g), 0),
                            lambda g: (S.sample_ekt(even, b, g), 0), 1, 5, 10, seed=0)


def test_rperp_small():
    rep = V.check_rperp_preservation(ZERO, 1, 2000, seed=8, threshold=0.05)
    assert rep.passed, rep.line()


@pytest.mark.parametrize("shift,d", [("SR", IncrementDistribution({-1: 0.4, 0: 0.4, 2: 0.2})),
                                     ("C", POS)])
def test_record_representation_small(shift, d):
    rep = V.check_record_representation(shift, d, 1, 1000, seed=9, threshold=0.08)
    assert rep.passed, rep.line()
    assert rep.details["mismatches"] == 0


def test_record_representation_rejects_unknown_shift():
    with pytest.raises(ValueError):
        V.check_record_representation("X", POS, 1, 1)


def test_joint_mark_law_small():
    b = _budget()
    rep = V.check_joint_mark_law(POS, 5000, seed=10,
                                 mekt_sampler=lambda g: (lambda t: (t, t.root))(S.sample_mekt(POS, b, None, g)))
    assert rep.passed, rep.line()


def test_offspring_identity_counts(rng):
    for d in (ZERO, POS, NEG):
        neg, nonneg, bad = V.offspring_identity_counts(sample_window(d, -2000, 2000, rng))
        assert bad == 0 and neg > 0


def test_compare_key_laws_detects_difference():
    same = V.compare_key_laws("same", lambda g: int(g.integers(3)), lambda g: int(g.integers(3)),
                              5000, seed=11, threshold=0.05)
    assert same.passed
    diff = V.compare_key_laws("diff", lambda g: int(g.integers(3)), lambda g: int(g.integers(2)),
                              5000, seed=12, threshold=0.05)
    assert not diff.passed
    cens = V.compare_key_laws("cens", lambda g: None if g.random() < 0.5 else 1, lambda g: 1,
                              1000, seed=13)
    assert not cens.passed and cens.censored_fraction > 0.4


def test_component_law_zero_mean_small():
    b = _budget()
    rep = V.compare_key_laws(
        "record vs EGWT",
        lambda g: V.record_ball_key_iid(ZERO, 1, g),
        V.tree_ball_key(lambda g: S.sample_egwt(offspring_law(ZERO), b, g), 1),
        4000, seed=14, threshold=0.05)
    assert rep.passed, rep.line()


def test_negative_marks():
    w = sample_window(ZERO, -5, 5, np.random.default_rng(0))
    assert V.negative_marks(w, 3) == tuple(int(x) for x in w.marks[2:5])
    with pytest.raises(V.CensoredError):
        V.negative_marks(w, 6)
