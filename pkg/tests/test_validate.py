import pytest

from noonlith import validate


def test_full_registry_passes():
    bad = [o for o in validate.run_checks() if not o.ok]
    assert not bad, bad


def test_quick_subset_is_a_subset():
    quick = {o.id for o in validate.run_checks(quick=True)}
    assert quick < set(validate.REGISTRY)


def test_mutation_is_caught_and_reverted():
    out = {o.id: o.ok for o in validate.run_checks(["PM-diagonal", "PM-antidiagonal"], mutate="steuernagel-difference")}
    assert out == {"PM-diagonal": False, "PM-antidiagonal": False}
    assert all(o.ok for o in validate.run_checks(["PM-diagonal"]))


def test_unknown_ids_rejected():
    with pytest.raises(ValueError):
        validate.run_checks(["nope"])
    with pytest.raises(ValueError):
        with validate.mutation("nope"):
            pass
