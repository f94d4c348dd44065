import math

import numpy as np
import pytest

from rmtlab import analytic as an
from rmtlab import zetalab as zl
from rmtlab.ensemble import normality_diagnostics
from rmtlab.errors import DomainError, RMTLabError
from rmtlab.specialfn import riemann_siegel_theta, zeta_critical_line


@pytest.fixture(scope="module")
def grid_1e4():
    return zl.build_zeta_grid(0.0, 1e4, 0.01)


def trial_division_is_prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


class TestPrimes:
    def test_small(self):
        assert zl.prime_sieve(10).tolist() == [2, 3, 5, 7]
        assert zl.prime_sieve(2).tolist() == [2]
        assert zl.prime_sieve(3).tolist() == [2, 3]

    def test_million(self):
        p = zl.prime_sieve(10 ** 6)
        assert p.size == 78498
        assert p[-1] == 999983

    def test_trial_division_sample(self):
        p = set(zl.prime_sieve(20_000).tolist())
        for n in list(range(2, 400)) + list(range(19_500, 20_001)):
            assert (n in p) == trial_division_is_prime(n)

    def test_domain(self):
        with pytest.raises(DomainError):
            zl.prime_sieve(1)


class TestAk:
    def test_k1_is_one(self):
        for cutoff in (100, 10 ** 4, 10 ** 6):
            assert zl.ak_coefficient(1.0, cutoff).value == pytest.approx(1.0, abs=1e-12)

    def test_k2_is_inverse_zeta2(self):
        r = zl.ak_coefficient(2.0, 10 ** 6)
        assert r.value == pytest.approx(6 / math.pi ** 2, abs=1e-6)
        assert r.tail_bound >= abs(r.value - 6 / math.pi ** 2) * 0.5

    def test_k_to_zero(self):
        assert zl.ak_coefficient(1e-6, 1000).value == pytest.approx(1.0, abs=1e-9)

    def test_tail_bound_shrinks(self):
        bounds = [zl.ak_coefficient(1.5, c).tail_bound for c in (10 ** 3, 10 ** 4, 10 ** 5)]
        assert bounds[0] > bounds[1] > bounds[2] >= 0

    @pytest.mark.parametrize("k", [1.5, 2.0])
    def test_monotone_beyond_1e3(self, k):
        vals = [zl.ak_coefficient(k, c).value for c in (1000, 3000, 10 ** 4, 3 * 10 ** 4, 10 ** 5)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        logs = zl._log_prime_factors(k, zl.prime_sieve(10 ** 5)[168:])
        assert np.all(logs <= 0)

    def test_small_k_factors(self):
        primes = zl.prime_sieve(10 ** 5)
        primes = primes[primes > 1000]
        logs = zl._log_prime_factors(0.5, primes)
        assert np.all(np.exp(logs) > 0)
        assert np.all(np.diff(np.abs(logs)) < 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            zl.ak_coefficient(0.0, 1000)
        with pytest.raises(DomainError):
            zl.ak_coefficient(1.0, 50)


class TestGrid:
    def test_short_grid_invariants(self):
        g = zl.build_zeta_grid(10.0, 11.0, 0.01)
        assert g.abs_zeta.size == 101
        assert np.all(np.abs(np.diff(g.arg_zeta_unwound)) < math.pi)
        assert np.all(g.abs_zeta >= 0)
        assert g.check_unwinding()

    def test_first_zero_bracketed(self, grid_1e4):
        t = grid_1e4.t
        near = (t > 14.13 - 0.02) & (t < 14.13 + 0.02)
        assert grid_1e4.abs_zeta[near].min() < 0.05

    def test_jump_at_first_zero(self):
        g = zl.build_zeta_grid(13.5, 14.5, 0.01)
        t = g.t
        drift_free = g.arg_zeta_unwound + riemann_siegel_theta(t)
        before = drift_free[t < 14.0]
        after = drift_free[t > 14.3]
        # S(t) = arg zeta / pi jumps up by one at a simple zero
        assert np.ptp(before) < 1e-9 and np.ptp(after) < 1e-9
        assert after[0] - before[0] == pytest.approx(math.pi, abs=1e-9)

    def test_anchor_agrees_with_path_value(self):
        # starting the grid away from 0 must reproduce the same unwound values
        full = zl.build_zeta_grid(0.0, 40.0, 0.01)
        part = zl.build_zeta_grid(20.0, 40.0, 0.01)
        np.testing.assert_allclose(part.arg_zeta_unwound, full.arg_zeta_unwound[2000:], atol=1e-7)

    def test_values_match_pointwise(self, grid_1e4):
        for i in (0, 1413, 5000, 999_999):
            t = grid_1e4.t[i]
            assert grid_1e4.abs_zeta[i] == pytest.approx(abs(zeta_critical_line(t).zeta), abs=1e-12)

    def test_zero_count_matches_backlund(self, grid_1e4):
        # N(T) = theta(T)/pi + 1 + S(T), with S = arg/pi
        t_end = grid_1e4.t[-1]
        s_end = grid_1e4.arg_zeta_unwound[-1] / math.pi
        n_zeros = riemann_siegel_theta(t_end) / math.pi + 1 + s_end
        assert n_zeros == pytest.approx(round(n_zeros), abs=1e-6)
        assert round(n_zeros) == 10142  # zeros with 0 < t <= 10^4

    @pytest.mark.parametrize("step", [0.1, 0.2, 0.4])
    def test_hidden_pair_found_at_coarse_step(self, step):
        # Lehmer's pair near t = 7005.08 is 0.038 apart; coarse grids still count both zeros
        fine = zl.build_zeta_grid(7000.0, 7010.4, 0.002)
        coarse = zl.build_zeta_grid(7000.0, 7010.4, step)
        assert coarse.arg_zeta_unwound[-1] == pytest.approx(fine.arg_zeta_unwound[-1], abs=1e-8)

    def test_too_coarse_is_reported(self):
        # arg zeta itself moves by more than pi per node here
        with pytest.raises(zl.UnwindingError):
            zl.build_zeta_grid(7000.0, 7010.4, 0.8)

    def test_grid_errors(self):
        with pytest.raises(DomainError):
            zl.build_zeta_grid(5.0, 5.0, 0.1)
        with pytest.raises(DomainError):
            zl.build_zeta_grid(0.0, 1.0, 0.3)
        with pytest.raises(DomainError):
            zl.build_zeta_grid(-1.0, 1.0, 0.1)

    def test_worker_independence(self):
        a = zl.build_zeta_grid(0.0, 200.0, 0.01, workers=1)
        b = zl.build_zeta_grid(0.0, 200.0, 0.01, workers=3)
        assert a.abs_zeta.tobytes() == b.abs_zeta.tobytes()
        assert a.arg_zeta_unwound.tobytes() == b.arg_zeta_unwound.tobytes()


class TestCache:
    def test_round_trip(self, tmp_path):
        g = zl.ZetaGrid(1.0, 2.0, 0.5, np.array([1.0, 0.5, 2.0]), np.array([0.1, -0.2, 0.3]), (1,))
        p = tmp_path / "g.bin"
        zl.save_grid(g, p)
        h = zl.load_grid(p)
        assert (h.t0, h.t1, h.step, h.flagged) == (1.0, 2.0, 0.5, (1,))
        assert h.abs_zeta.tobytes() == g.abs_zeta.tobytes()
        assert h.arg_zeta_unwound.tobytes() == g.arg_zeta_unwound.tobytes()
        raw = p.read_bytes()
        assert raw[:4] == b"ZGRD"
        assert int.from_bytes(raw[4:8], "little") == zl.CACHE_VERSION

    def test_corruption_detected(self, tmp_path):
        g = zl.ZetaGrid(0.0, 1.0, 0.5, np.ones(3), np.zeros(3))
        p = tmp_path / "g.bin"
        zl.save_grid(g, p)
        data = p.read_bytes()
        p.write_bytes(data[:-3])
        with pytest.raises(RMTLabError):
            zl.load_grid(p)
        p.write_bytes(b"XXXX" + data[4:])
        with pytest.raises(RMTLabError):
            zl.load_grid(p)

    def test_cached_build(self, tmp_path):
        a = zl.cached_zeta_grid(0.0, 50.0, 0.01, cache_dir=tmp_path)
        files = list(tmp_path.glob("zgrid-*.bin"))
        assert len(files) == 1
        b = zl.cached_zeta_grid(0.0, 50.0, 0.01, cache_dir=tmp_path)
        assert a.arg_zeta_unwound.tobytes() == b.arg_zeta_unwound.tobytes()

    def test_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv(zl.CACHE_ENV, str(tmp_path))
        zl.cached_zeta_grid(0.0, 30.0, 0.01)
        assert len(list(tmp_path.glob("zgrid-*.bin"))) == 1


class TestMoments:
    def test_second_moment_finite_t(self, grid_1e4):
        # mean of |zeta|^2 over [0, T] is ln(T / 2 pi) + 2c - 1 up to O(T^-1/2)
        est = zl.zeta_abs_moment(grid_1e4, 1.0)
        ref = math.log(1e4 / (2 * math.pi)) + 2 * 0.5772156649 - 1
        assert est.mean == pytest.approx(ref, rel=0.01)
        assert est.estimator.value == "block_quadrature"

    def test_fourth_moment_band(self, grid_1e4):
        est = zl.zeta_abs_moment(grid_1e4, 2.0)
        ratio = est.mean / (math.log(1e4) ** 4 / (2 * math.pi ** 2))
        assert 0.5 <= ratio <= 1.6

    def test_small_k(self, grid_1e4):
        assert zl.zeta_abs_moment(grid_1e4, 1e-12).mean == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(DomainError):
            zl.zeta_abs_moment(grid_1e4, 0.0)

    def test_resolution_doubling(self):
        a = zl.zeta_abs_moment(zl.build_zeta_grid(0.0, 1e3, 0.02), 1.0).mean
        b = zl.zeta_abs_moment(zl.build_zeta_grid(0.0, 1e3, 0.01), 1.0).mean
        assert abs(a - b) / b < 0.005

    def test_log_moment(self, grid_1e4):
        assert zl.zeta_log_moment(grid_1e4, 0).mean == 1.0
        est = zl.zeta_log_moment(grid_1e4, 1)
        ratio = est.mean / zl.selberg_scale(1e4)
        assert 0.5 <= ratio <= 2.0
        assert est.excluded <= 0.01 * grid_1e4.abs_zeta.size

    def test_arg_moments(self, grid_1e4):
        assert zl.zeta_arg_moment(grid_1e4, 0).mean == 1.0
        m2 = zl.zeta_arg_moment(grid_1e4, 1)
        assert 0.4 <= m2.mean / zl.selberg_scale(1e4) <= 2.0
        m1 = zl.zeta_arg_power(grid_1e4, 1)
        assert abs(m1.mean) <= 0.3 * math.sqrt(m2.mean)

    def test_arg_is_symmetric(self, grid_1e4):
        rep = normality_diagnostics(grid_1e4.arg_zeta_unwound[::10])
        assert abs(rep.skewness) <= 0.5

    def test_log_abs_is_left_skewed(self, grid_1e4):
        # ln|zeta| has a heavy left tail near zeros at this height; the skew is
        # far outside the symmetric band, which is recorded as a known deviation
        rep = normality_diagnostics(zl.log_abs_samples(grid_1e4)[::10])
        assert rep.skewness < -0.5

    def test_block_error_positive(self, grid_1e4):
        est = zl.zeta_abs_moment(grid_1e4, 1.0)
        assert 0 < est.std_err < 0.1 * est.mean

    def test_bad_orders(self, grid_1e4):
        with pytest.raises(DomainError):
            zl.zeta_log_moment(grid_1e4, -1)
        with pytest.raises(DomainError):
            zl.zeta_arg_power(grid_1e4, 1.5)


class TestCorrespondence:
    @pytest.mark.parametrize("order", [2, 4, 6])
    def test_log_moment_dictionary(self, order):
        t_height = 1e4
        # 2 pi N rho(0) = 2N, so N = e^s / 2 matches the scale s = ln ln T
        s = math.log(math.log(t_height))
        n = math.exp(s) / 2.0
        rmt = an.gaussian_moment_coefficient(order // 2) * s ** (order // 2)
        assert an.zeta_log_moment_prediction(t_height, order) == rmt
        assert an.predict_log_moment(n, 0.0, order).value == pytest.approx(rmt, rel=1e-14)

    def test_odd_orders_vanish(self):
        assert an.zeta_log_moment_prediction(1e4, 3) == 0.0


class TestXiPrefactor:
    def test_value_at_zero(self, oracle):
        ref = -(math.pi ** -0.25) * oracle["gamma_quarter"] / 4
        assert ref == pytest.approx(-0.6808, abs=1e-4)
        assert zl.xi_prefactor(0.0) == pytest.approx(ref, abs=1e-13)

    def test_even(self):
        lam = np.array([0.5, 3.0, 20.0, 77.7])
        np.testing.assert_allclose(zl.xi_prefactor(-lam), zl.xi_prefactor(lam), rtol=1e-14)

    def test_against_completed_zeta(self, oracle):
        # the stated factor (-lam^2/2 - 1/4) differs from s(s-1)/2 = -lam^2/2 - 1/8,
        # so |A zeta| exceeds |xi| by exactly (lam^2/2 + 1/4)/(lam^2/2 + 1/8)
        lam = 20.0
        got = abs(zl.xi_prefactor(lam)) * oracle["abs_zeta_20"]
        expected_ratio = (lam ** 2 / 2 + 0.25) / (lam ** 2 / 2 + 0.125)
        assert got / oracle["xi_abs_20"] == pytest.approx(expected_ratio, rel=1e-9)
        assert abs(zeta_critical_line(lam).zeta) == pytest.approx(oracle["abs_zeta_20"], abs=1e-9)

    def test_selberg_scale(self):
        assert zl.selberg_scale(1e4) == pytest.approx(0.5 * math.log(math.log(1e4)))
        with pytest.raises(DomainError):
            zl.selberg_scale(2.0)
