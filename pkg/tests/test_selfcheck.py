from vidtext.selfcheck import selfcheck


def test_default_selfcheck_all_pass():
    results = selfcheck()
    assert len(results) == 4
    assert all(r.passed for r in results)
    names = [r.name for r in results]
    assert names == [
        "shape-arithmetic",
        "contrastive-gradient",
        "hungarian-brute-force",
        "dtw-brute-force",
    ]


def test_bad_temperature_fails_gradient_check_with_diagnostic():
    results = {r.name: r for r in selfcheck(tau=0.0)}
    res = results["contrastive-gradient"]
    assert not res.passed
    assert "temperature" in res.detail
    assert "divides" in res.detail


def test_bad_patch_fails_shape_check_with_diagnostic():
    results = {r.name: r for r in selfcheck(patch=17)}
    res = results["shape-arithmetic"]
    assert not res.passed
    assert "divisible" in res.detail


def test_forced_failure_does_not_poison_other_checks():
    results = {r.name: r for r in selfcheck(tau=0.0, patch=17)}
    assert results["hungarian-brute-force"].passed
    assert results["dtw-brute-force"].passed
