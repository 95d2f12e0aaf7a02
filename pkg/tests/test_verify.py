import pytest

from qhessian.verify import run_suite


@pytest.mark.parametrize("suite,kw", [
    ("algebra", {"count": 100}),
    ("cones", {"count": 100}),
    ("forms", {"count": 30}),
    ("crosscheck", {"quadratics": 4, "cubics": 2}),
    ("solver", {}),
    ("capacity", {}),
])
def test_suites_pass(suite, kw):
    rep = run_suite(suite, 3, **kw)
    assert rep["passed"], [c for c in rep["checks"] if not c["passed"]]


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suite("bogus")
