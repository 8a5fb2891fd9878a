"""Smoke test for the compiled extension.

    maturin develop -m crates/py/Cargo.toml
    python crates/py/python/smoke_test.py
"""
from fractions import Fraction as F

import condcompat_py as cc


def main():
    a = [["1/5", None, "1/2"], ["4/5", None, "1/2"]]
    b = [["1/6", None, None], ["2/5", "2/5", "1/5"]]
    filled = cc.complete(a, b)
    assert filled["diagnostics"] == "exact_unique", filled
    assert filled["b"][0] == [F(1, 6), F(1, 2), F(1, 3)]
    assert [row[1] for row in filled["a"]] == [F(3, 7), F(4, 7)]

    verdict = cc.check(filled["a"], filled["b"])
    assert verdict.label == "compatible_unique"
    assert verdict.eta == [F(3, 8), F(5, 8)]

    incompatible = ([[0.5, 0.5], [0.5, 0.5]], [["1/3", "2/3"], ["2/3", "1/3"]])
    assert not cc.check(*incompatible, method="lp").is_compatible
    eps, eta = cc.min_epsilon(*incompatible)
    assert eps == F(1, 12), eps
    assert cc.grid_min_violation(*incompatible, steps=1000) >= eps

    joint = cc.random_joint(7, 3, 4)
    a, b = cc.derive_conditionals(joint)
    assert cc.check(a, b).joint == joint

    print("condcompat_py", cc.__version__, "ok")


if __name__ == "__main__":
    main()
