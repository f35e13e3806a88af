import itertools
import math

import numpy as np
import pytest

from harmonica.activations import activation
from harmonica.errors import ConvergenceError, FitError, TruncationError
from harmonica.harmonics import funk_hecke_eigenvalue, sphere_surface
from harmonica.image import sample_uniform
from harmonica.kernel import TruncationConfig, build_kernel, eval_kernel
from harmonica.spectrum import (SpectralExpansion, SpectrumEntry,
                                canonical_profile, counting_function,
                                enumerate_spectrum, expand_spectrum, fit_decay,
                                lambda_table, mercer_reconstruct, mu_eigenvalue,
                                profile_multiplicity, eigenvalue_windows)
from harmonica.taylor import (compose_series, exp_series, geometric_series,
                              power, series_from)

EXP = exp_series(64)


def test_lambda_alpha_zero_column():
    tab = lambda_table(EXP, 3, 8, 3)
    assert tab.lam[0, 0] == pytest.approx(
        sphere_surface(2) * math.gamma(1.0) * math.gamma(0.5)
        / (2 * math.gamma(1.5)))
    np.testing.assert_array_equal(tab.lam[1:, 0], 0.0)


def test_lambda_bessel_ratios_d2():
    # for f1 = exp on the circle the closed form reduces to pi * I_k(1);
    # oracle: the Bessel series sum_s (1/2)^(2s+k) / (s! (s+k)!)
    tab = lambda_table(EXP, 2, 9, 1)

    def bessel_series(k):
        return sum((0.5) ** (2 * s + k) / (math.factorial(s) * math.factorial(s + k))
                   for s in range(40))

    for k in range(9):
        want = bessel_series(k) / bessel_series(k + 1)
        got = tab.lam[k, 1] / tab.lam[k + 1, 1]
        assert got == pytest.approx(want, rel=1e-8)


def test_lambda_matches_quadrature_up_to_kappa():
    for d in (2, 3, 4):
        for f1 in (EXP, geometric_series(0.5, 96)):
            tab = lambda_table(f1, d, 10, 4)
            assert tab.kappa_spread < 1e-10
            for alpha in range(5):
                fa = power(f1, alpha, f1.order)
                for k in range(11):
                    fh = funk_hecke_eigenvalue(fa, k, d)
                    if tab.lam[k, alpha] > 1e-250:
                        ratio = fh / tab.lam[k, alpha]
                        assert ratio == pytest.approx(tab.kappa, rel=1e-6)
                    else:
                        assert abs(fh) < 1e-12


def test_lambda_table_convergence_guard():
    short = geometric_series(0.9, 64)
    with pytest.raises(ConvergenceError):
        lambda_table(short, 2, 60, 1)


def test_mu_profile_beyond_dstar_is_exact_zero():
    spec = build_kernel([activation("exp"), activation("identity")], 3, 3)
    tab = lambda_table(spec.f1, 3, 6, spec.q_cap)
    assert mu_eigenvalue(spec, (2, 1, 0), tab) == 0.0
    assert mu_eigenvalue(spec, (1, 1, 1), tab) == 0.0


def test_mu_single_patch_matches_composed_quadrature():
    # n=1: mu_(k) = sum_q a_q lam[k][q] should equal the quadrature
    # eigenvalue of (g o f1) up to kappa
    spec = build_kernel([activation("exp"), activation("square")], 1, 3)
    tab = lambda_table(spec.f1, 3, 10, spec.q_cap)
    gf1 = compose_series(spec.g, spec.f1, 64)
    for k in range(11):
        mu = mu_eigenvalue(spec, (k,), tab)
        fh = funk_hecke_eigenvalue(gf1, k, 3)
        assert fh == pytest.approx(tab.kappa * mu, rel=1e-6)


def test_mu_square_square_composition_oracle():
    # profile (0,0) for acts [square, square]: a_2 = 1 and the multinomial
    # sum is enumerated exhaustively
    spec = build_kernel([activation("square"), activation("square")], 2, 4)
    tab = lambda_table(spec.f1, 4, 4, spec.q_cap)
    want = 0.0
    for a1 in range(3):
        a2 = 2 - a1
        want += (math.factorial(2) / (math.factorial(a1) * math.factorial(a2))
                 * tab.lam[0, a1] * tab.lam[0, a2])
    got = mu_eigenvalue(spec, (0, 0), tab)
    assert got == pytest.approx(want, rel=1e-14)
    assert got == pytest.approx(2 * tab.lam[0, 1] ** 2
                                + 2 * tab.lam[0, 2] * tab.lam[0, 0], rel=1e-14)


def test_mu_exhaustive_composition_oracle_n3():
    # brute-force over all compositions of q into 3 parts for a D=2 kernel
    spec = build_kernel([activation("exp"), activation("square")], 3, 3)
    tab = lambda_table(spec.f1, 3, 5, spec.q_cap)
    a_q = spec.g.coeffs
    for profile in [(0, 0, 0), (1, 0, 0), (2, 1, 0), (3, 3, 0)]:
        want = 0.0
        for q in range(3):
            for comp in itertools.product(range(q + 1), repeat=3):
                if sum(comp) != q:
                    continue
                coef = a_q[q] * math.factorial(q)
                for c in comp:
                    coef /= math.factorial(c)
                term = coef
                for k, al in zip(profile, comp):
                    term *= tab.lam[k, al]
                want += term
        assert mu_eigenvalue(spec, profile, tab) == pytest.approx(want, rel=1e-13)


def test_mu_permutation_symmetry():
    spec = build_kernel([activation("exp"), activation("square")], 3, 3)
    tab = lambda_table(spec.f1, 3, 5, spec.q_cap)
    assert (mu_eigenvalue(spec, (2, 1, 0), tab)
            == mu_eigenvalue(spec, (0, 1, 2), tab)
            == mu_eigenvalue(spec, (1, 0, 2), tab))


def test_mu_truncation_error():
    spec = build_kernel([activation("exp"), activation("square")], 2, 3)
    tab = lambda_table(spec.f1, 3, 4, spec.q_cap)
    with pytest.raises(TruncationError):
        mu_eigenvalue(spec, (5, 0), tab)


def test_mu_outer_degree_beyond_expansion():
    tc = TruncationConfig(q_max=8, a_max=16)
    spec = build_kernel([activation("exp"),
                         activation("poly", coeffs=[0.0] * 12 + [1.0])], 1, 3, tc)
    tab = lambda_table(spec.f1, 3, 2, min(spec.q_cap, 16))
    with pytest.raises(TruncationError):
        mu_eigenvalue(spec, (1,), tab)


def test_profile_multiplicities():
    # d=3, degrees <= 1, n=2: multiplicities 1, 6, 9
    assert profile_multiplicity(canonical_profile((0, 0), 2), 3) == 1
    assert profile_multiplicity(canonical_profile((1, 0), 2), 3) == 6
    assert profile_multiplicity(canonical_profile((1, 1), 2), 3) == 9


def test_enumerate_spectrum_degree_one():
    spec = build_kernel([activation("exp"), activation("square")], 2, 3)
    tab = lambda_table(spec.f1, 3, 1, spec.q_cap)
    entries = enumerate_spectrum(spec, tab, 1)
    assert {e.profile for e in entries} == {(0, 0), (1, 0), (1, 1)}
    assert sum(e.multiplicity for e in entries) == 16
    mus = [e.mu for e in entries]
    assert mus == sorted(mus, reverse=True)


def test_enumerate_prunes_interactions_at_d_star():
    # linear outer: no profile with two nonzero degrees survives
    spec = build_kernel([activation("exp"), activation("identity")], 2, 3)
    tab = lambda_table(spec.f1, 3, 6, spec.q_cap)
    entries = enumerate_spectrum(spec, tab, 6)
    assert all(sum(1 for k in e.profile if k) <= 1 for e in entries)


def test_counting_function():
    entries = [SpectrumEntry((1, 0), 2.0, 6), SpectrumEntry((0, 0), 1.0, 1),
               SpectrumEntry((1, 1), 0.5, 9)]
    assert counting_function(entries, 3.0) == 0
    assert counting_function(entries, 1.0) == 7
    assert counting_function(entries, 0.1) == 16
    assert expand_spectrum(entries).size == 16


def test_fit_decay_exact_model_recovery():
    mus = [math.exp(-2.0 * m ** 0.25) for m in range(400)]
    entries = [SpectrumEntry((0,), mu, 1) for mu in mus]
    fit = fit_decay(entries)
    assert fit["exponent_p"] == pytest.approx(4.0, abs=1e-9)
    assert fit["gamma"] == pytest.approx(2.0, abs=1e-6)
    assert fit["goodness"] == pytest.approx(1.0, abs=1e-12)


def test_fit_decay_guards():
    few = [SpectrumEntry((0,), 1.0, 1)] * 50
    with pytest.raises(FitError):
        fit_decay(few)
    flat = [SpectrumEntry((0,), 1.0, 1)] * 200
    with pytest.raises(FitError):
        fit_decay(flat)


def test_mercer_reconstruction_error_shrinks_with_k_max():
    spec = build_kernel([activation("exp"), activation("identity")], 1, 3)
    tab = lambda_table(spec.f1, 3, 20, spec.q_cap)
    x = sample_uniform(1, 3, 0)
    y = sample_uniform(1, 3, 1)
    direct = eval_kernel(spec, x, y)
    errs = [abs(direct - mercer_reconstruct(spec, tab, x, y, km))
            for km in (5, 10, 20)]
    assert errs[0] >= errs[1] >= errs[2]
    assert errs[2] / spec.diag_value() <= 1e-6


def test_mercer_reconstruction_diag_n2():
    spec = build_kernel([activation("exp"), activation("square")], 2, 3)
    tab = lambda_table(spec.f1, 3, 12, spec.q_cap)
    x = sample_uniform(2, 3, 4)
    got = mercer_reconstruct(spec, tab, x, x, 12)
    assert got == pytest.approx(spec.diag_value(), abs=1e-5 * spec.diag_value())


def test_reconstruction_covers_integral_activations():
    # erf-sigmoid / smooth-hinge majorants run through the whole spectral
    # pipeline, not just the exp family
    # these majorants decay slower than exp's, so the degree cutoff sits at 20
    for inner in ("erf_sigmoid", "smooth_hinge"):
        spec = build_kernel([activation(inner), activation("square")], 2, 3,
                            TruncationConfig(series_order=96))
        tab = lambda_table(spec.f1, 3, 20, spec.q_cap)
        assert tab.kappa == pytest.approx(2.0, rel=1e-9)
        expansion = SpectralExpansion(spec, tab, 20)
        scale = spec.diag_value()
        for i in range(5):
            x = sample_uniform(2, 3, (31, i))
            y = sample_uniform(2, 3, (32, i))
            err = abs(eval_kernel(spec, x, y) - expansion.reconstruct(x, y))
            assert err <= 1e-5 * scale


def test_spectral_expansion_multiple_pairs():
    spec = build_kernel([activation("exp"), activation("square")], 3, 2)
    tab = lambda_table(spec.f1, 2, 12, spec.q_cap)
    expansion = SpectralExpansion(spec, tab, 12)
    scale = spec.diag_value()
    for i in range(10):
        x = sample_uniform(3, 2, (7, i))
        y = sample_uniform(3, 2, (8, i))
        err = abs(eval_kernel(spec, x, y) - expansion.reconstruct(x, y))
        assert err <= 1e-5 * scale


def test_eigenvalue_windows_shape():
    r = 0.5
    f1 = geometric_series(r, 200)
    tab = lambda_table(f1, 3, 50, 4)
    win = eigenvalue_windows(tab, r, alphas=(1, 2, 3, 4), m_max=50)
    for alpha, w in win.items():
        assert np.all(w["upper_seq"] > 0) and np.all(w["lower_seq"] > 0)
        assert math.isfinite(w["upper_window_ratio"])
        # upper sequence must stay bounded above: no growth from m=25 to 50
        assert w["upper_seq"][50] <= 10.0 * w["upper_seq"][25]
        # lower sequence must stay bounded below: no collapse
        assert w["lower_seq"][50] >= w["lower_seq"][25] / 10.0
