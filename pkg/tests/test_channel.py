import math

import numpy as np
import pytest
import torch
from scipy import stats

from config.schema import ChannelConfig
from core.channel import (
    ChannelManager,
    block_generator,
    doppler_shift,
    effective_snr_db,
    equalize,
    get_channel_manager,
    sample_fading,
    snr_to_noise_var,
    transmit,
)
from core.channel.providers import RayleighDopplerChannel
from core.errors import ConfigurationError, ContractViolationError, UsageError


def unit_symbols(n: int, seed: int = 0, rows: int = 1) -> torch.Tensor:
    g = torch.Generator().manual_seed(seed)
    z = torch.randn(rows, n, 2, generator=g, dtype=torch.float64)
    x = torch.complex(z[..., 0], z[..., 1])
    return x / x.abs().square().mean(dim=1, keepdim=True).sqrt()


class TestDoppler:
    def test_vehicle_speeds(self):
        assert doppler_shift(5.9e9, 120 / 3.6) == pytest.approx(655.6, abs=0.1)
        assert doppler_shift(5.9e9, 50 / 3.6) == pytest.approx(273.1, abs=0.1)
        assert doppler_shift(5.9e9, 0.0) == 0.0

    def test_config_units(self):
        cfg = ChannelConfig(velocity_kmh=120.0)
        assert cfg.carrier_hz == pytest.approx(5.9e9)
        assert cfg.velocity_mps == pytest.approx(33.3333, rel=1e-4)
        assert cfg.bandwidth_hz == pytest.approx(20e6)


class TestNoiseVar:
    @pytest.mark.parametrize("snr, expected", [(0.0, 1.0), (10.0, 0.1), (19.0, 0.012589)])
    def test_values(self, snr, expected):
        assert snr_to_noise_var(snr) == pytest.approx(expected, rel=1e-4)

    def test_link_budget(self):
        cfg = ChannelConfig(link_budget=True, tx_power_dbm=23.0, path_loss_db=105.0,
                            noise_figure_db=9.0, bandwidth_mhz=20.0)
        floor = -174.0 + 10 * math.log10(20e6) + 9.0
        assert effective_snr_db(cfg) == pytest.approx(23.0 - 105.0 - floor)
        assert effective_snr_db(ChannelConfig(snr_db=7.0)) == 7.0


class TestFading:
    def test_static_vehicle_constant_gain(self):
        cfg = ChannelConfig(velocity_kmh=0.0)
        h = sample_fading(cfg, 64, torch.Generator().manual_seed(1))
        assert torch.allclose(h, h[:1].expand_as(h))

    def test_magnitude_constant_within_block(self):
        cfg = ChannelConfig(velocity_kmh=120.0)
        h = sample_fading(cfg, 1000, torch.Generator().manual_seed(2))
        assert torch.allclose(h.abs(), h[:1].abs().expand_as(h), rtol=1e-12)

    def test_phase_law(self):
        cfg = ChannelConfig(velocity_kmh=120.0)
        h = sample_fading(cfg, 500, torch.Generator().manual_seed(3))
        step = torch.angle(h[1:] * h[:-1].conj())
        expected = 2 * math.pi * doppler_shift(cfg.carrier_hz, cfg.velocity_mps) / cfg.bandwidth_hz
        assert torch.allclose(step, torch.full_like(step, expected), atol=1e-9)

    def test_awgn_all_ones(self):
        h = sample_fading(ChannelConfig(mode="awgn"), 16)
        assert torch.equal(h, torch.ones(16, dtype=torch.complex128))

    def test_rayleigh_envelope(self):
        cfg = ChannelConfig(velocity_kmh=50.0)
        provider = RayleighDopplerChannel()
        gen = torch.Generator().manual_seed(11)
        mags = np.array([float(provider.sample_fading(cfg, 1, gen)[0].abs()) for _ in range(100_000)])
        ks = stats.kstest(mags, stats.rayleigh(scale=1 / math.sqrt(2)).cdf)
        assert ks.statistic < 0.01

    def test_empty_block_rejected(self):
        with pytest.raises(ConfigurationError):
            sample_fading(ChannelConfig(), 0)

    def test_unknown_mode(self):
        manager = ChannelManager(auto_configure=False)
        with pytest.raises(ConfigurationError):
            manager.get_provider("rayleigh_doppler")
        assert "identity" in get_channel_manager().providers


class TestTransmit:
    def test_noiseless_identity(self):
        x = unit_symbols(256)
        y, real = transmit(x, ChannelConfig(mode="identity"))
        assert torch.equal(y, x)
        assert float(real.sigma2[0]) == 0.0

    def test_awgn_noise_power(self):
        x = unit_symbols(1_000_000, seed=1)
        y, real = transmit(x, ChannelConfig(mode="awgn", snr_db=10.0), torch.Generator().manual_seed(4))
        noise = y - x
        assert float(noise.abs().square().mean()) == pytest.approx(0.1, rel=0.02)
        assert float(noise.real.var()) == pytest.approx(0.05, rel=0.02)
        assert float(noise.imag.var()) == pytest.approx(0.05, rel=0.02)
        assert float(real.sigma2[0]) == pytest.approx(0.1)

    def test_rayleigh_received_power(self):
        cfg = ChannelConfig(mode="rayleigh_doppler", snr_db=10.0)
        x = unit_symbols(25, seed=2, rows=40_000)
        gens = [block_generator(0, i) for i in range(40_000)]
        y, _ = transmit(x, cfg, gens)
        assert float(y.abs().square().mean()) == pytest.approx(1.1, rel=0.02)

    def test_unnormalized_input(self):
        with pytest.raises(ContractViolationError):
            transmit(2.0 * unit_symbols(64), ChannelConfig(mode="awgn"))

    def test_loose_tolerance(self):
        x = 1.1 * unit_symbols(64)
        transmit(x, ChannelConfig(mode="awgn"), power_tol=0.25)

    def test_deterministic(self):
        cfg = ChannelConfig(snr_db=5.0)
        x = unit_symbols(128, rows=3)
        y1, r1 = transmit(x, cfg, [block_generator(9, i) for i in range(3)])
        y2, r2 = transmit(x, cfg, [block_generator(9, i) for i in range(3)])
        assert torch.equal(y1, y2) and torch.equal(r1.h, r2.h)

    def test_rows_independent_of_batch_composition(self):
        cfg = ChannelConfig(snr_db=5.0)
        x = unit_symbols(128, rows=3)
        y_all, _ = transmit(x, cfg, [block_generator(9, i) for i in range(3)])
        y_one, _ = transmit(x[2:], cfg, [block_generator(9, 2)])
        assert torch.equal(y_all[2:], y_one)

    def test_generator_count_mismatch(self):
        with pytest.raises(UsageError):
            transmit(unit_symbols(8, rows=2), ChannelConfig(), [block_generator(0, 0)])

    def test_one_dimensional_input(self):
        y, real = transmit(unit_symbols(32)[0], ChannelConfig(mode="awgn"), torch.Generator().manual_seed(0))
        assert y.shape == (32,)
        assert real.h.shape == (1, 32)

    def test_shadowing_only_in_link_budget_mode(self):
        x = unit_symbols(16, rows=4)
        gens = [block_generator(1, i) for i in range(4)]
        _, plain = transmit(x, ChannelConfig(), gens)
        assert torch.all(plain.shadow_db == 0)
        gens = [block_generator(1, i) for i in range(4)]
        _, budget = transmit(x, ChannelConfig(link_budget=True), gens)
        assert torch.any(budget.shadow_db != 0)
        base = snr_to_noise_var(effective_snr_db(ChannelConfig(link_budget=True)))
        expected = base * 10 ** (budget.shadow_db / 10)
        assert torch.allclose(budget.sigma2, expected)


class TestEqualize:
    def test_noiseless_inverse(self):
        x = unit_symbols(256)
        h = torch.polar(torch.rand(1, 256, dtype=torch.float64) + 0.1,
                        torch.rand(1, 256, dtype=torch.float64) * 6.28)
        y_eq, erased = equalize(h * x, h)
        assert (y_eq - x).abs().max() < 1e-12
        assert not erased.any()

    def test_pure_rotation_keeps_noise_power(self):
        g = torch.Generator().manual_seed(0)
        n = torch.complex(torch.randn(1, 200_000, generator=g, dtype=torch.float64),
                          torch.randn(1, 200_000, generator=g, dtype=torch.float64))
        h = torch.polar(torch.ones(1, 200_000, dtype=torch.float64), torch.full((1, 200_000), 1.3, dtype=torch.float64))
        y_eq, _ = equalize(n, h)
        assert float(y_eq.abs().square().mean()) == pytest.approx(float(n.abs().square().mean()), rel=1e-9)

    def test_deep_fade_erased(self):
        h = torch.tensor([[1.0 + 0j, 1e-14 + 0j, 0j]], dtype=torch.complex128)
        y = torch.tensor([[0.5 + 0.5j, 0.1 + 0j, 0.2 + 0j]], dtype=torch.complex128)
        y_eq, erased = equalize(y, h)
        assert erased.tolist() == [[False, True, True]]
        assert torch.isfinite(y_eq.real).all() and torch.isfinite(y_eq.imag).all()
        assert y_eq[0, 1] == 0 and y_eq[0, 2] == 0

    def test_raw_mode(self):
        y = unit_symbols(8)
        y_eq, erased = equalize(y, torch.zeros_like(y), mode="raw")
        assert torch.equal(y_eq, y) and not erased.any()
