import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arhlab.hilbert import Curve, EigenSystem, Grid
from arhlab.regularize import (RegScheme, alpha_grid, cutoff_schedule, domain_diagnostic,
                               multipliers, pointwise_limit_check, positive_count, reg_inverse)
from arhlab.simulate import fourier_basis

G = Grid.uniform(41)


def system(lams, grid=G):
    lams = np.asarray(lams, dtype=float)
    return EigenSystem(grid, lams, fourier_basis(grid, lams.size))


spectra = st.lists(st.floats(1e-6, 10.0), min_size=1, max_size=12).map(
    lambda v: np.sort(np.array(v))[::-1])


class TestScheme:
    def test_parse_roundtrip(self):
        for s in ("cutoff:4", "penalized:0.1", "tikhonov:0.001"):
            assert str(RegScheme.parse(s)) == s
        assert RegScheme.parse("cutoff:4").k == 4
        assert RegScheme.parse("tikhonov:0.5").alpha == 0.5

    @pytest.mark.parametrize("text", ["cutoff", "cutoff:0", "cutoff:1.5", "penalized:-1", "ridge:1"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            RegScheme.parse(text)

    def test_ordering(self):
        assert RegScheme.cutoff(1).regularization_order() < RegScheme.cutoff(3).regularization_order()
        assert RegScheme.penalized(1.0).regularization_order() < RegScheme.penalized(0.1).regularization_order()


class TestMultipliers:
    def test_cutoff_table(self):
        assert np.allclose(multipliers([1.0, 0.5, 0.25], RegScheme.cutoff(2)), [1, 2, 0], atol=1e-10)

    def test_penalized(self):
        assert multipliers([1.0], RegScheme.penalized(1.0))[0] == pytest.approx(0.5, abs=1e-10)

    def test_tikhonov(self):
        assert multipliers([0.5], RegScheme.tikhonov(0.25))[0] == pytest.approx(1.0, abs=1e-10)

    def test_cutoff_beyond_rank(self):
        with pytest.raises(ValueError, match="largest admissible k is 2"):
            multipliers([1.0, 0.5, 0.0], RegScheme.cutoff(3))

    def test_floor(self):
        assert positive_count([1.0, 1e-13, 0.0]) == 1
        assert positive_count([1.0, 1e-11]) == 2

    def test_operator_matches_multipliers(self):
        eig = system([1.0, 0.5, 0.25])
        inv = reg_inverse(eig, RegScheme.tikhonov(0.1))
        for i in range(3):
            e = Curve(G, eig.functions[i])
            assert np.allclose(inv.apply(e).values, inv.multipliers[i] * e.values, atol=1e-10)

    @given(spectra, st.floats(1e-4, 1.0))
    @settings(max_examples=60)
    def test_gamma_dagger_gamma(self, lam, alpha):
        k = max(1, lam.size // 2)
        d = multipliers(lam, RegScheme.cutoff(k)) * lam
        assert np.allclose(d[:k], 1.0, atol=1e-10)
        d = multipliers(lam, RegScheme.penalized(alpha)) * lam
        assert np.allclose(1 - d, alpha / (lam + alpha), atol=1e-10)
        d = multipliers(lam, RegScheme.tikhonov(alpha)) * lam
        assert np.allclose(1 - d, alpha / (lam**2 + alpha), atol=1e-10)

    @given(spectra, st.floats(1e-4, 1.0))
    @settings(max_examples=40)
    def test_bound_equals_operator_norm(self, lam, alpha):
        eig = system(lam)
        for s in (RegScheme.cutoff(lam.size), RegScheme.penalized(alpha), RegScheme.tikhonov(alpha)):
            inv = reg_inverse(eig, s)
            analytic = {"cutoff": 1 / lam.min(), "penalized": 1 / (lam.min() + alpha),
                        "tikhonov": float(np.max(lam / (lam**2 + alpha)))}[s.kind]
            assert inv.bound == pytest.approx(analytic, rel=1e-10)
            assert inv.operator.op_norm() == pytest.approx(analytic, rel=1e-10)


class TestPointwise:
    def test_exact_on_first(self):
        eig = system([1.0, 0.5])
        e1 = Curve(G, eig.functions[0])
        res = pointwise_limit_check(eig, e1, [RegScheme.cutoff(1), RegScheme.cutoff(2)])
        assert res.in_domain and max(res.errors) < 1e-10

    def test_tikhonov_decreasing(self):
        eig = system([1.0, 0.5])
        x = Curve(G, eig.functions[0] + eig.functions[1])
        res = pointwise_limit_check(eig, x, [RegScheme.tikhonov(a) for a in (1e-1, 1e-2, 1e-3)])
        assert res.errors[0] > res.errors[1] > res.errors[2]

    def test_outside_domain(self):
        eig = system([1.0, 0.5])
        x = Curve(G, fourier_basis(G, 5)[4])
        res = pointwise_limit_check(eig, x, [RegScheme.cutoff(1)])
        assert not res.in_domain and res.errors is None

    @given(spectra, st.integers(0, 1000))
    @settings(max_examples=30)
    def test_monotone(self, lam, seed):
        eig = system(lam)
        x = Curve(G, np.random.default_rng(seed).standard_normal(lam.size) @ eig.functions)
        ks = [RegScheme.cutoff(k) for k in range(1, lam.size + 1)]
        errs = pointwise_limit_check(eig, x, ks).errors
        assert all(a >= b - 1e-12 * max(1, a) for a, b in zip(errs, errs[1:]))
        for kind in ("penalized", "tikhonov"):
            errs = pointwise_limit_check(eig, x, [RegScheme(kind, a) for a in (1, 0.1, 0.01, 1e-3)]).errors
            assert all(a >= b - 1e-12 * max(1, a) for a, b in zip(errs, errs[1:]))


class TestDomainDiagnostic:
    def test_first_eigenfunction(self):
        eig = system([1.0, 0.5, 0.25])
        prof = domain_diagnostic(Curve(G, eig.functions[0]), eig)
        assert np.allclose(prof, prof[0])

    def test_linear_growth(self):
        lam = np.array([1.0, 0.5, 0.25, 0.125])
        eig = system(lam)
        prof = domain_diagnostic(Curve(G, lam @ eig.functions), eig)
        assert np.allclose(prof, [1, 2, 3, 4], atol=1e-8)

    def test_zero(self):
        eig = system([1.0, 0.5])
        assert np.all(domain_diagnostic(Curve.zeros(G), eig) == 0)


class TestSchedule:
    def test_values(self):
        assert cutoff_schedule(2000) == 4
        assert cutoff_schedule(10) == 1
        assert cutoff_schedule(2000, max_k=2) == 2

    def test_ratio_vanishes_eventually(self):
        # n^{1/5} log n / n^{1/4} peaks at n = e^20, so the decrease starts past ~5e8
        ratio = lambda n: cutoff_schedule(n) * math.log(n) / n**0.25
        early = [ratio(n) for n in (10**3, 10**4, 10**5, 10**6)]
        assert all(a < b for a, b in zip(early, early[1:]))
        late = [ratio(10**e) for e in (10, 12, 14, 16, 20, 30)]
        assert all(a > b for a, b in zip(late, late[1:]))
        assert ratio(10**60) < 0.5

    def test_alpha_grid(self):
        a = alpha_grid(2.0)
        assert a.size == 20 and a[0] == pytest.approx(2.0) and a[-1] == pytest.approx(2e-6)
