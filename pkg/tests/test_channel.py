import numpy as np
import pytest

from stcmsense.channel import (
    UlaLayout,
    dft_pilots,
    path_gain,
    path_gains,
    sample_covariance,
    stack_db,
    stack_sb,
    steering_derivative,
    steering_vector,
    synthesize_echo,
    unvec,
    vec,
)
from stcmsense.errors import NonPositiveDistance, NotPerfectSquare, TooFewSymbols
from stcmsense.geometry import ScatterPoint, TargetKind, angles_from_position, triangle_distances
from stcmsense.metasurface import HarmonicSet, harmonic_pattern_vector
from stcmsense.rng import stream_rng
NOISE_POWER = 1e-15          # -120 dBm
PILOT_POWER = 10 ** (-1.8)   # 12 dBm


class TestSteering:
    def test_boresight_all_ones(self, ula):
        assert np.allclose(steering_vector(ula, 0.0), np.ones(16), atol=1e-15)

    def test_unit_modulus_norm(self, ula):
        rng = np.random.default_rng(1)
        for a in rng.uniform(-1.5, 1.5, size=50):
            v = steering_vector(ula, a)
            assert np.allclose(np.abs(v), 1.0, atol=1e-14)
            assert np.linalg.norm(v) == pytest.approx(4.0, rel=1e-14)

    def test_negative_angle_is_conjugate(self, ula):
        for a in np.linspace(-1.4, 1.4, 29):
            assert np.allclose(steering_vector(ula, -a), np.conj(steering_vector(ula, a)), atol=1e-14)

    def test_derivative_matches_fd(self, ula):
        rng = np.random.default_rng(2)
        h = 1e-7
        worst = 0.0
        for a in rng.uniform(-1.4, 1.4, size=200):
            fd = (steering_vector(ula, a + h) - steering_vector(ula, a - h)) / (2 * h)
            an = steering_derivative(ula, a)
            worst = max(worst, np.max(np.abs(an - fd)) / np.max(np.abs(fd)))
        assert worst < 1e-6

    def test_single_antenna_derivative_zero(self):
        ula1 = UlaLayout(m_antennas=1, spacing=0.015, carrier_hz=1e10)
        assert steering_derivative(ula1, 0.4) == pytest.approx(0.0)

    def test_entrywise_phase_orthogonality(self, ula):
        # unit-modulus trajectories: Re{conj(a_n) da_n} = 0 per entry
        a = steering_vector(ula, 0.6)
        da = steering_derivative(ula, 0.6)
        assert np.allclose(np.real(np.conj(a) * da), 0.0, atol=1e-12)


class TestPilots:
    def test_orthogonality_m16(self, pilots):
        x = pilots.symbols
        gram = x @ x.conj().T
        expect = (np.linalg.norm(x, "fro") ** 2 / 16) * np.eye(16)
        assert np.allclose(gram, expect, atol=1e-18)

    def test_total_power_is_frobenius(self, pilots):
        assert np.linalg.norm(pilots.symbols, "fro") ** 2 == pytest.approx(PILOT_POWER, rel=1e-12)

    def test_m4_equals_scaled_kron_oracle(self):
        # oracle: explicit 2-point DFT Kronecker square
        d2 = np.array([[1, 1], [1, -1]], dtype=complex)
        kron = np.kron(d2, d2)
        p4 = dft_pilots(4, 2.0)
        assert np.allclose(p4.symbols, np.sqrt(2.0) / 4.0 * kron, atol=1e-14)

    def test_not_perfect_square_raises(self):
        with pytest.raises(NotPerfectSquare):
            dft_pilots(12, 1.0)

    def test_column_covariance_proportional_identity(self, pilots):
        r = sample_covariance(pilots)
        off = r - np.diag(np.diag(r))
        assert np.max(np.abs(off)) < 1e-18
        assert np.allclose(np.diag(r).real, np.diag(r).real[0], rtol=1e-12)


class TestSampleCovariance:
    def test_matches_double_loop(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        acc = np.zeros((4, 4), dtype=complex)
        for s in range(6):
            acc += np.outer(x[:, s], np.conj(x[:, s]))
        assert np.allclose(sample_covariance(x), acc / 5, atol=1e-14)

    def test_rank_one_for_repeated_symbol(self):
        col = np.array([1.0, 1j, -1.0, -1j])
        x = np.tile(col[:, None], (1, 5))
        r = sample_covariance(x)
        assert np.linalg.matrix_rank(r, tol=1e-12) == 1

    def test_too_few_symbols(self):
        with pytest.raises(TooFewSymbols):
            sample_covariance(np.ones((4, 1), dtype=complex))


class TestPathGain:
    def test_inverse_square_law(self):
        g1 = abs(path_gain(10.0))
        g2 = abs(path_gain(20.0))
        assert g2 / g1 == pytest.approx(0.25, rel=1e-12)

    def test_zero_rcs_gives_zero(self):
        assert path_gain(25.0, rcs_sqrt=0.0) == 0

    def test_nonpositive_distance_raises(self):
        with pytest.raises(NonPositiveDistance):
            path_gain(0.0)

    def test_sb_db_magnitude_ratio(self, geom):
        # roundtrips 2 d_r = 100 and d_S + d_r + d_r' ; ratio of magnitudes
        # follows the inverse-square path law exactly
        p = ScatterPoint(position=[0.0, 0.0, 50.0], rcs_sqrt=10 ** (1 / 20),
                         kind=TargetKind.HUMAN_LIKE)
        g = path_gains(p, geom)
        assert g.sb_distance == pytest.approx(100.0)
        assert g.db_distance == pytest.approx(200.0)
        assert abs(g.sb_gain) / abs(g.db_gain) == pytest.approx((200.0 / 100.0) ** 2, rel=1e-12)


class TestEchoSynthesis:
    def test_empty_scene_zero_noise_only_c1(self, geom, ula, panel, code, harmonics, pilots):
        bundle = synthesize_echo([], geom, ula, panel, code, harmonics, pilots,
                                 NOISE_POWER, rng=None, keep_components=True)
        for m in harmonics.members:
            comp = bundle.components[m]
            assert np.allclose(bundle.harmonic(m), comp["c1"], atol=0)
            assert np.max(np.abs(comp["c2"])) == 0
            assert np.max(np.abs(comp["c3"])) == 0

    def test_c2_only_at_carrier(self, geom, ula, panel, code, harmonics, pilots):
        p = ScatterPoint(position=[20.0, 0.0, 40.0], rcs_sqrt=1.0)
        bundle = synthesize_echo([p], geom, ula, panel, code, harmonics, pilots,
                                 NOISE_POWER, rng=None, keep_components=True)
        for m in harmonics.members:
            c2 = bundle.components[m]["c2"]
            if m == 0:
                assert np.max(np.abs(c2)) > 0
            else:
                assert np.max(np.abs(c2)) == 0

    def test_component_assembly_oracle(self, geom, ula, panel, code, harmonics, pilots):
        # independent assembly of c1..c4 from first principles at m = 0
        p = ScatterPoint(position=[25.0, 0.0, 60.0], rcs_sqrt=2.0)
        bundle = synthesize_echo([p], geom, ula, panel, code, harmonics, pilots,
                                 NOISE_POWER, rng=None, keep_components=True)
        lam = ula.wavelength
        ang = angles_from_position(p.position, geom)
        d_r, d_s, d_rp = triangle_distances(p.position, geom)
        x = pilots.symbols
        a0 = steering_vector(ula, 0.0)
        ar = steering_vector(ula, ang.alpha)
        eta = harmonic_pattern_vector(panel, code, harmonics, ang.xi, 0.0)
        eta_p = harmonic_pattern_vector(panel, code, harmonics, 0.0, 0.0)
        g_sb = (lam / (4 * np.pi * (2 * d_r) ** 2)) * np.exp(-2j * np.pi * 2 * d_r / lam) * 2.0
        g_db = (lam / (4 * np.pi * (d_s + d_r + d_rp) ** 2)) * np.exp(-2j * np.pi * (d_s + d_r + d_rp) / lam) * 2.0
        g_c1 = (lam / (4 * np.pi * (2 * d_s) ** 2)) * np.exp(-2j * np.pi * 2 * d_s / lam)
        i0 = harmonics.members.index(0)
        expect = (
            g_c1 * eta_p[i0] * np.outer(a0, a0) @ x
            + g_sb * np.outer(ar, ar) @ x
            + g_db * eta[i0] * np.outer(ar, a0) @ x
            + g_db * eta[i0] * np.outer(a0, ar) @ x
        )
        assert np.allclose(bundle.harmonic(0), expect, rtol=1e-12, atol=1e-30)

    def test_noise_power_and_reproducibility(self, geom, ula, panel, code, pilots):
        h1 = HarmonicSet(1)
        draws = []
        for _ in range(2):
            rng = stream_rng(77, 1, 2)
            b = synthesize_echo([], geom, ula, panel, code, h1, pilots, NOISE_POWER,
                                rng=rng, keep_components=True)
            draws.append(np.concatenate([b.components[m]["noise"].ravel() for m in h1.members]))
        assert np.array_equal(draws[0], draws[1])
        # empirical power over >= 1e5 samples within 1 percent
        rng = stream_rng(78, 0)
        big = synthesize_echo([], geom, ula, panel, code, HarmonicSet(0), pilots,
                              NOISE_POWER, rng=rng, keep_components=True)
        samples = [big.components[0]["noise"].ravel()]
        for k in range(1, 400):
            b = synthesize_echo([], geom, ula, panel, code, HarmonicSet(0), pilots,
                                NOISE_POWER, rng=stream_rng(78, k), keep_components=True)
            samples.append(b.components[0]["noise"].ravel())
        n = np.concatenate(samples)
        assert n.size >= 100_000
        assert np.mean(np.abs(n) ** 2) == pytest.approx(NOISE_POWER, rel=0.01)

    def test_echo_linearity_in_rcs(self, geom, ula, panel, code, harmonics, pilots):
        p1 = ScatterPoint(position=[30.0, 0.0, 30.0], rcs_sqrt=1.0)
        p2 = ScatterPoint(position=[30.0, 0.0, 30.0], rcs_sqrt=3.0)
        b1 = synthesize_echo([p1], geom, ula, panel, code, harmonics, pilots, 0.0,
                             keep_components=True)
        b2 = synthesize_echo([p2], geom, ula, panel, code, harmonics, pilots, 0.0,
                             keep_components=True)
        for m in harmonics.members:
            for c in ("c2", "c3", "c4"):
                assert np.allclose(b2.components[m][c], 3.0 * b1.components[m][c], rtol=1e-12)
            assert np.allclose(b2.components[m]["c1"], b1.components[m]["c1"], rtol=0)


class TestStacking:
    def test_sb_stack_recovers_c2_matrix(self, geom, ula, panel, code, harmonics, pilots):
        p = ScatterPoint(position=[-18.0, 0.0, 55.0], rcs_sqrt=1.5)
        y, regs, gains = stack_sb([p], geom, ula, pilots, 0.0)
        bundle = synthesize_echo([p], geom, ula, panel, code, harmonics, pilots, 0.0,
                                 keep_components=True)
        assert np.allclose(unvec(y, (16, 16)), bundle.components[0]["c2"], rtol=1e-12, atol=1e-30)
        assert np.allclose(y, gains[0] * regs[0], rtol=1e-12)

    def test_db_stack_single_target_exact(self, geom, ula, panel, code, harmonics, pilots):
        p = ScatterPoint(position=[40.0, 0.0, 70.0], rcs_sqrt=0.7)
        y, regs, gains = stack_db([p], geom, ula, panel, code, harmonics, pilots, 0.0)
        assert y.shape == (len(harmonics) * 16 * 16,)
        assert np.allclose(y, gains[0] * regs[0], rtol=1e-12)

    def test_db_regressor_norm_brute_force(self, geom, ula, panel, code, harmonics, pilots):
        # oracle: per-harmonic assembly of the c3+c4 blocks
        p = ScatterPoint(position=[33.0, 0.0, 44.0], rcs_sqrt=1.0)
        _, regs, _ = stack_db([p], geom, ula, panel, code, harmonics, pilots, 0.0)
        ang = angles_from_position(p.position, geom)
        eta = harmonic_pattern_vector(panel, code, harmonics, ang.xi, 0.0)
        ar = steering_vector(ula, ang.alpha)
        a0 = steering_vector(ula, 0.0)
        b = np.outer(ar, a0) + np.outer(a0, ar)
        acc = 0.0
        for em in eta:
            acc += np.linalg.norm(em * b @ pilots.symbols, "fro") ** 2
        assert np.linalg.norm(regs[0]) ** 2 == pytest.approx(acc, rel=1e-12)

    def test_db_stack_matches_echo_components(self, geom, ula, panel, code, harmonics, pilots):
        p = ScatterPoint(position=[12.0, 0.0, 80.0], rcs_sqrt=1.0)
        y, _, _ = stack_db([p], geom, ula, panel, code, harmonics, pilots, 0.0)
        bundle = synthesize_echo([p], geom, ula, panel, code, harmonics, pilots, 0.0,
                                 keep_components=True)
        blocks = [
            vec(bundle.components[m]["c3"] + bundle.components[m]["c4"])
            for m in harmonics.members
        ]
        assert np.allclose(y, np.concatenate(blocks), rtol=1e-12, atol=1e-30)


def test_echo_bundle_npz_roundtrip(tmp_path, geom, ula, panel, code, harmonics, pilots):
    p = ScatterPoint(position=[10.0, 0.0, 20.0], rcs_sqrt=1.0)
    b = synthesize_echo([p], geom, ula, panel, code, harmonics, pilots, NOISE_POWER,
                        rng=stream_rng(5))
    path = tmp_path / "echo.npz"
    b.save_npz(path)
    data = np.load(path)
    assert np.array_equal(data["harmonic_0"], b.harmonic(0))
    assert float(data["noise_power"]) == NOISE_POWER
