"""Smoke test for the `expfam` extension module.

Build and install first, e.g. `maturin develop --release -m crates/py/Cargo.toml`
or `pip install crates/py`. Then run `python python/smoke_test.py` (or pytest).
"""

import math

import expfam


def close(a, b, tol):
    return abs(a - b) <= tol


def test_family_basics():
    g = expfam.Family.gamma(1.0)
    assert g.name == "gamma" and g.dimension == 1
    assert close(g.cumulant(-1.0), 0.0, 1e-15)
    assert close(g.mean(-0.5)[0], 2.0, 1e-14)
    assert close(g.bregman(-2.0, -1.0), 1.0 - math.log(2.0), 1e-14)
    assert close(g.convex_conjugate(1.0), -1.0, 1e-14)
    assert close(math.exp(g.log_density(-1.0, 1.0)), math.exp(-1.0), 1e-15)
    pe = expfam.Family.poisson_exponential(2.0)
    assert close(math.exp(pe.log_density(-1.0, 0.0)), math.exp(-1.0), 1e-15)
    gauss = expfam.Family.gaussian([[2.0, 0.5], [0.5, 1.0]])
    assert gauss.dimension == 2
    assert gauss.covariance([0.0, 0.0]) == [[2.0, 0.5], [0.5, 1.0]]
    assert len(expfam.Family.inverse_gaussian(2.0).sample(-1.0, 5, seed=3)) == 5


def test_cnml_equals_jeffreys():
    g = expfam.Family.gamma(1.0)
    cnml = expfam.predict_log_density(g, [1.0], [1.0], method="cnml")
    assert close(cnml, math.log(0.25), 1e-9)
    for fam in (expfam.Family.gamma(2.0), expfam.Family.gaussian(1.0), expfam.Family.poisson_exponential(2.0)):
        c = expfam.predict_log_density(fam, [0.7, 1.9], [1.2], method="cnml")
        j = expfam.predict_log_density(fam, [0.7, 1.9], [1.2], method="jeffreys")
        assert close(c, j, 1e-6), (fam, c, j)


def test_intervals():
    g = expfam.Family.gamma(1.0)
    cred = expfam.interval(g, [1.0], level=0.9, method="credible")
    conf = expfam.interval(g, [1.0], level=0.9, method="confidence")
    assert close(cred["upper"], 2.302585, 1e-6) and cred["upper"] == conf["upper"]
    pe = expfam.Family.poisson_exponential(2.0)
    a = expfam.interval(pe, [2.0], method="credible")["upper"]
    b = expfam.interval(pe, [2.0], method="confidence")["upper"]
    assert abs(a - b) > 1e-8


def test_errors():
    g = expfam.Family.gamma(1.0)
    try:
        g.log_density(-1.0, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative observation accepted")
    try:
        expfam.interval(expfam.Family.poisson_exponential(2.0), [0.0, 0.0])
    except expfam.DegenerateDataError:
        pass
    else:
        raise AssertionError("all-zero data accepted")


def test_saddlepoint_and_verify():
    g = expfam.Family.gamma(1.0)
    dev = expfam.saddlepoint_deviation(g, 3, -1.0, [-0.5, -1.0, -2.0])
    assert dev < 1e-6
    reports = expfam.verify("lemma1", family=g)
    assert reports and all(r["passed"] for r in reports)


def test_coverage():
    r = expfam.coverage(expfam.Family.gamma(1.0), -2.0, m=5, trials=4000, seed=1)
    assert r["trials"] == 4000 and 0.85 < r["coverage"] < 0.95


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok  {t.__name__}")
    print(f"{len(tests)} smoke tests passed")
