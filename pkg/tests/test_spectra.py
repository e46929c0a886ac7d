"""Squeezing spectra and wave-packet variance integrals."""

import numpy as np
import pytest

from photonsub import spectra as sp
from photonsub import temporal as tp
from photonsub.errors import GridError, ModelViolationError

MHZ = 1e6
F_HWHM = 65 * MHZ  # half of the 130 MHz source linewidth

TABLE1_RATES = [tp.rate_from_fwhm(f * MHZ) for f in (136.0, 18.7, 94.0, 130.0)]


def composite():
    return tp.composite_mode(TABLE1_RATES, 0.0, tp.default_grid(n=4096))


class TestSqueezingSpectrum:
    def test_no_pump_is_shot_noise(self):
        s = sp.SqueezingSpectrum(0.0, 0.0, F_HWHM)
        f = np.linspace(0, 5 * F_HWHM, 50)
        np.testing.assert_allclose(sp.squeezing_spectrum(s, f, +1), 1.0)
        np.testing.assert_allclose(sp.squeezing_spectrum(s, f, -1), 1.0)

    def test_high_frequency_limit(self):
        s = sp.SqueezingSpectrum(0.3, 0.1, F_HWHM)
        assert sp.squeezing_spectrum(s, 1e4 * F_HWHM, +1) == pytest.approx(1.0, abs=1e-6)
        assert sp.squeezing_spectrum(s, 1e4 * F_HWHM, -1) == pytest.approx(1.0, abs=1e-6)

    def test_cat_scenario_dc_value(self):
        # direct evaluation with the measured external loss
        s = sp.SqueezingSpectrum(0.25, 0.113, F_HWHM)
        assert sp.squeezing_spectrum(s, 0.0, -1) == pytest.approx(0.432, abs=5e-4)

    def test_pure_spectra_multiply_to_one(self):
        s = sp.SqueezingSpectrum(0.3, 0.0, F_HWHM)
        f = np.linspace(0, 10 * F_HWHM, 200)
        prod = sp.squeezing_spectrum(s, f, +1) * sp.squeezing_spectrum(s, f, -1)
        np.testing.assert_allclose(prod, 1.0, atol=1e-12)

    def test_monotone_toward_shot_noise(self):
        s = sp.SqueezingSpectrum(0.25, 0.113, F_HWHM)
        f = np.linspace(0, 20 * F_HWHM, 400)
        plus = sp.squeezing_spectrum(s, f, +1)
        minus = sp.squeezing_spectrum(s, f, -1)
        assert np.all(np.diff(plus) < 0)
        assert np.all(np.diff(minus) > 0)
        assert np.all(minus <= 1.0) and np.all(plus >= 1.0)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            sp.SqueezingSpectrum(1.0, 0.0, F_HWHM)
        with pytest.raises(ValueError):
            sp.SqueezingSpectrum(0.2, 1.5, F_HWHM)
        s = sp.SqueezingSpectrum(0.2, 0.0, F_HWHM)
        with pytest.raises(ValueError):
            sp.squeezing_spectrum(s, -1.0, +1)
        with pytest.raises(ValueError):
            sp.squeezing_spectrum(s, 1.0, 2)


class TestPumpScaling:
    def test_zero_pump(self):
        assert sp.pump_to_xi(0.0, 400.0) == 0.0

    def test_calibrated_threshold_reproduces_scenarios(self):
        # calibrate from the (5 mW, xi = 0.11) pair
        p_th = sp.threshold_from_calibration(5.0, 0.11)
        assert p_th == pytest.approx(413.0, abs=1.0)
        assert sp.pump_to_xi(25.0, p_th) == pytest.approx(0.25, rel=0.02)
        assert sp.pump_to_xi(60.0, p_th) == pytest.approx(0.39, rel=0.03)

    def test_above_threshold_rejected(self):
        with pytest.raises(ValueError, match="threshold"):
            sp.pump_to_xi(500.0, 400.0)


class TestWavepacketVariances:
    def test_no_pump_gives_vacuum(self):
        s = sp.SqueezingSpectrum(0.0, 0.0, F_HWHM)
        g = sp.wavepacket_variances(composite(), s)
        assert g.v_minus == pytest.approx(0.5, abs=1e-6)
        assert g.v_plus == pytest.approx(0.5, abs=1e-6)

    def test_narrowband_mode_sees_dc_spectrum(self):
        # composite mode is ~7x narrower than the source: variances within
        # 2% of the DC values at moderate pump
        s = sp.SqueezingSpectrum(0.1, 0.0, F_HWHM)
        g = sp.wavepacket_variances(composite(), s)
        assert g.v_minus == pytest.approx(sp.squeezing_spectrum(s, 0.0, -1) / 2, rel=0.02)
        assert g.v_plus == pytest.approx(sp.squeezing_spectrum(s, 0.0, +1) / 2, rel=0.02)

    @pytest.mark.parametrize("xi", [0.1, 0.2, 0.3, 0.4])
    def test_source_bandwidth_mode_impurity_is_ten_percent(self, xi):
        # double-sided exponential at the source bandwidth, lossless spectrum
        s = sp.SqueezingSpectrum(xi, 0.0, F_HWHM)
        mode = tp.opo_mode(TABLE1_RATES[3], 0.0, tp.default_grid(n=8192, dt=2.5e-10))
        _, l_eff = sp.effective_params(sp.wavepacket_variances(mode, s))
        assert 0.05 <= l_eff <= 0.15

    @pytest.mark.parametrize("xi", [0.1, 0.2, 0.3, 0.4])
    def test_narrowband_mode_is_nearly_pure(self, xi):
        s = sp.SqueezingSpectrum(xi, 0.0, F_HWHM)
        _, l_eff = sp.effective_params(sp.wavepacket_variances(composite(), s))
        assert l_eff < 0.02

    def test_purity_bound_and_narrowband_limit(self):
        # for L = 0 the product V- V+ stays >= 1/4 for every mode and
        # approaches 1/4 as the filter narrows
        s = sp.SqueezingSpectrum(0.25, 0.0, F_HWHM)
        g4 = TABLE1_RATES[3]
        deficits = []
        for div in (2, 5, 15, 40, 100):
            grid = tp.default_grid(n=65536, dt=1e-9) if div >= 40 else tp.default_grid(n=8192)
            mode = tp.composite_mode([TABLE1_RATES[0], g4 / div, TABLE1_RATES[2], g4], 0.0, grid)
            g = sp.wavepacket_variances(mode, s)
            deficits.append(g.v_minus * g.v_plus - 0.25)
        assert all(d >= -1e-12 for d in deficits)
        assert deficits[-1] < deficits[0]
        assert deficits[-1] < 2e-4

    def test_impurity_monotone_in_filter_bandwidth(self):
        s = sp.SqueezingSpectrum(0.25, 0.0, F_HWHM)
        g4 = TABLE1_RATES[3]
        losses = []
        for div in (1, 2, 4, 8, 16):
            grid = tp.default_grid(n=16384, dt=1e-9)
            mode = tp.composite_mode([TABLE1_RATES[0], g4 / div, TABLE1_RATES[2], g4], 0.0, grid)
            _, l_eff = sp.effective_params(sp.wavepacket_variances(mode, s))
            losses.append(l_eff)
        assert np.all(np.diff(losses) < 0)

    def test_rejects_undersampled_spectrum(self):
        # fast mode on a coarse grid leaves spectral weight beyond Nyquist
        s = sp.SqueezingSpectrum(0.25, 0.0, F_HWHM)
        mode = tp.opo_mode(tp.rate_from_fwhm(130 * MHZ), 0.0, tp.default_grid(n=2048, dt=1e-9))
        with pytest.raises(GridError, match="Nyquist|edge"):
            sp.wavepacket_variances(mode, s)


class TestEffectiveParams:
    def test_round_trip(self):
        for r, loss in [(0.2, 0.0), (0.5, 0.1), (0.9, 0.4)]:
            vm = (1 - loss) * np.exp(-2 * r) / 2 + loss / 2
            vp = (1 - loss) * np.exp(+2 * r) / 2 + loss / 2
            r2, l2 = sp.effective_params(sp.GaussianModeState(vm, vp))
            assert r2 == pytest.approx(r, abs=1e-8)
            assert l2 == pytest.approx(loss, abs=1e-8)

    def test_csv_export(self, tmp_path):
        s = sp.SqueezingSpectrum(0.25, 0.113, F_HWHM)
        path = tmp_path / "spectra.csv"
        sp.spectrum_to_csv(s, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape[1] == 3
        assert data[0, 1] == pytest.approx(0.432, abs=5e-4)
