import numpy as np
import pytest

from solitonlab.verify import (SuiteError, TestReport, bbs_balance_imbalance, bbs_exact_balance_test,
                               detailed_balance_test, parse_suite, reports_csv, run_suite, two_sample_test)


def test_two_sample_examples():
    rng = np.random.default_rng(7)
    x = rng.uniform(size=10_000)
    stat, p = two_sample_test(x, x.copy())
    assert stat == 0
    stat, p = two_sample_test(x, rng.uniform(0.5, 1.5, 10_000))
    assert abs(stat - 0.5) < 0.03 and p < 1e-10
    from solitonlab.measures import sample
    stat, p = two_sample_test(sample("gamma(lambda=2,c=1)", 10_000, 1), sample("gamma(lambda=2,c=1)", 10_000, 2))
    assert p > 0.01


def test_two_sample_degenerate():
    stat, p = two_sample_test(np.ones(10), np.ones(20))
    assert stat == 0 and p == 1


def test_two_sample_chi2():
    rng = np.random.default_rng(7)
    stat, p = two_sample_test(rng.integers(0, 5, 5000), rng.integers(0, 5, 5000), kind="chi2")
    assert p > 0.01


def test_bbs_exact_balance():
    assert bbs_balance_imbalance(0.25, 1 / 3) < 1e-12
    assert bbs_balance_imbalance(0.25, 0.5) > 0.01
    assert bbs_exact_balance_test(0.1).passed


def test_sampled_balance_bbs():
    assert detailed_balance_test("bbs", "bernoulli(p=0.25)", "geometric(r=0.3333333333333333)", 10**5, 7).passed
    assert not detailed_balance_test("bbs", "bernoulli(p=0.25)", "geometric(r=0.5)", 10**5, 7).passed


def test_report_text_and_csv():
    r = TestReport("demo", "bbs", (), 10, 3)
    r.add_p("ks", 0.1, 0.5)
    text = r.to_text()
    assert "seed=3" in text and "n=10" in text and "passed=true" in text.lower()
    csv = reports_csv([r])
    assert csv.splitlines()[0] == "test,target,subtest,statistic,pvalue,threshold,passed,n,seed"


def test_suite_parse_errors():
    with pytest.raises(SuiteError) as e:
        parse_suite("balance-exact p=0.25\ninvariance system=bbs specs=bernoulli(p=)\n")
    assert e.value.line == 2
    with pytest.raises(SuiteError):
        parse_suite("frobnicate x=1")
    with pytest.raises(SuiteError):
        parse_suite("walk op=maxpast specs=bernoullistep(p=0.3,q=0.1,a=1) expect=maybe")


def test_suite_controls():
    res = run_suite("balance-exact p=0.25\nbalance-exact p=0.25 r=0.5 expect=fail\n"
                    "balance-exact p=0.25 r=0.5\n")
    assert [ok for _, _, ok in res] == [True, True, False]
