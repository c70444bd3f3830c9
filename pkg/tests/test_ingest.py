import numpy as np
import pytest

from podwind.exceptions import ConfigError, DataQualityError
from podwind.ingest import (
    Tap,
    TapRecord,
    force_coefficients,
    ingest,
    integrate_floor_forces,
    pressure_coefficients,
)
from podwind.records import (
    GAMMA_R,
    BuildingGeometry,
    RecordSet,
    destandardize,
    split_records,
    standardize,
)


def make_geom(n_floors=2):
    return BuildingGeometry(
        n_floors=n_floors,
        height=0.8,
        b_x=0.3,
        b_y=0.5,
        floor_elevations=np.arange(1, n_floors + 1) * 0.8 / n_floors,
    )


def make_taps(n_floors=2, per_floor=2):
    taps = []
    for n in range(n_floors):
        for k in range(per_floor):
            taps.append(
                Tap(
                    tap_id=f"t{n}{k}",
                    floor=n,
                    area=0.01,
                    nx=1.0 if k == 0 else 0.0,
                    ny=0.0 if k == 0 else 1.0,
                    lever_arm=0.05 * (1 if k == 0 else -1),
                )
            )
    return tuple(taps)


def make_record(pressures, taps=None, **kw):
    taps = taps or make_taps()
    defaults = dict(sample_rate=625.0, p0=10.0, air_density=1.2, u_h=12.0)
    defaults.update(kw)
    return TapRecord(taps=taps, pressures=pressures, **defaults)


class TestPressureCoefficients:
    def test_direct_arithmetic(self):
        taps = (Tap("a", 0, 0.01, 1, 0, 0.0),)
        raw = TapRecord(
            taps=taps,
            pressures=np.full((4, 1), 50.0),
            sample_rate=625.0,
            p0=10.0,
            air_density=1.0,
            u_h=1.0,
        )
        # q = 0.5 Pa here; rescale u_h so q = 80 Pa
        raw = TapRecord(
            taps=taps,
            pressures=np.full((4, 1), 50.0),
            sample_rate=625.0,
            p0=10.0,
            air_density=1.0,
            u_h=np.sqrt(160.0),
        )
        cp = pressure_coefficients(raw)
        assert cp == pytest.approx(0.5)

    def test_zero_when_pressure_equals_reference(self):
        raw = make_record(np.full((10, 4), 10.0))
        assert np.all(pressure_coefficients(raw) == 0.0)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(3)
        p = rng.normal(20.0, 5.0, size=(50, 4))
        raw = make_record(p)
        cp = pressure_coefficients(raw)
        q = 0.5 * raw.air_density * raw.u_h**2
        for s in range(p.shape[0]):
            for t in range(p.shape[1]):
                expected = (p[s, t] - raw.p0) / q
                assert abs(cp[s, t] - expected) < 1e-14

    def test_nonpositive_q_rejected(self):
        with pytest.raises(DataQualityError, match="dynamic pressure"):
            pressure_coefficients(make_record(np.ones((5, 4)), u_h=0.0))

    def test_nan_names_tap_and_sample(self):
        p = np.ones((5, 4))
        p[3, 1] = np.nan
        with pytest.raises(DataQualityError, match="'t01'.*sample 3"):
            pressure_coefficients(make_record(p))


class TestFloorIntegration:
    def test_single_tap(self):
        geom = make_geom(1)
        taps = (Tap("a", 0, 0.01, 1.0, 0.0, 0.07),)
        cp = np.ones((3, 1))  # q*cp = 100 Pa
        fx, fy, tz = integrate_floor_forces(cp, geom, taps, q=100.0)
        assert fx == pytest.approx(1.0)
        assert np.all(fy == 0.0)
        assert tz == pytest.approx(100.0 * 0.01 * 0.07)

    def test_symmetric_taps_cancel_torque(self):
        geom = make_geom(1)
        taps = (
            Tap("a", 0, 0.01, 1.0, 0.0, 0.05),
            Tap("b", 0, 0.01, 1.0, 0.0, -0.05),
        )
        _, _, tz = integrate_floor_forces(np.ones((4, 2)), geom, taps, q=50.0)
        np.testing.assert_allclose(tz, 0.0, atol=1e-15)

    def test_linearity(self):
        geom = make_geom()
        taps = make_taps()
        rng = np.random.default_rng(4)
        cp = rng.normal(size=(20, len(taps)))
        once = integrate_floor_forces(cp, geom, taps, q=80.0)
        twice = integrate_floor_forces(2.0 * cp, geom, taps, q=80.0)
        for a, b in zip(once, twice):
            np.testing.assert_allclose(b, 2.0 * a, rtol=1e-14)

    def test_floor_without_taps_rejected(self):
        geom = make_geom(3)
        with pytest.raises(ConfigError, match="no taps"):
            integrate_floor_forces(np.ones((2, 4)), geom, make_taps(2), q=1.0)

    def test_nonpositive_area_rejected(self):
        geom = make_geom(1)
        taps = (Tap("a", 0, 0.0, 1, 0, 0.0),)
        with pytest.raises(ConfigError, match="area"):
            integrate_floor_forces(np.ones((2, 1)), geom, taps, q=1.0)


class TestForceCoefficients:
    def test_direct_arithmetic(self):
        geom = make_geom(1)
        fx = np.full((4, 1), 120.0)
        zeros = np.zeros((4, 1))
        rs = force_coefficients(fx, zeros, zeros, geom, q=100.0, sample_rate=625.0)
        # CF_x = 120 / (100 * 0.3 * 0.8) = 5; constant signal -> mean only
        assert rs.means[0] == pytest.approx(5.0)
        assert np.all(rs.components[:, 0] == 0.0)

    def test_torque_normalization(self):
        geom = make_geom(1)
        tz = np.full((4, 1), 10.0)
        zeros = np.zeros((4, 1))
        rs = force_coefficients(zeros, zeros, tz, geom, q=100.0, sample_rate=625.0)
        # B_max = 0.5 -> normalizer 100 * 0.8 * 0.125 = 10
        assert rs.means[2] == pytest.approx(1.0)

    def test_label_order_is_x_y_z_blocks(self):
        geom = make_geom(2)
        zeros = np.zeros((4, 2))
        rs = force_coefficients(zeros, zeros, zeros, geom, q=1.0, sample_rate=1.0)
        assert rs.labels == ("CF_x_1", "CF_x_2", "CF_y_1", "CF_y_2",
                             "CT_z_1", "CT_z_2")
        assert rs.n_components == 3 * geom.n_floors

    def test_end_to_end_linearity(self):
        geom = make_geom()
        rng = np.random.default_rng(9)
        p = rng.normal(30.0, 8.0, size=(100, 4))
        raw = make_record(p, p0=0.0)
        scaled = make_record(3.0 * p, p0=0.0)
        rs1, rs3 = ingest(raw, geom), ingest(scaled, geom)
        np.testing.assert_allclose(rs3.components, 3.0 * rs1.components, rtol=1e-12)
        np.testing.assert_allclose(rs3.means, 3.0 * rs1.means, rtol=1e-12)


class TestStandardize:
    def make_rs(self, data):
        data = np.asarray(data, dtype=float)
        return RecordSet(
            components=data - data.mean(0),
            sample_rate=10.0,
            labels=tuple(f"c{i}" for i in range(data.shape[1])),
            means=data.mean(0),
        )

    def test_known_scale(self):
        rng = np.random.default_rng(0)
        data = rng.normal(0, 2.0, size=(100_000, 1))
        std = standardize(self.make_rs(data))
        sigma = data[:, 0].std()
        value = 7.0
        idx = np.argmin(np.abs(data[:, 0] - data[:, 0].mean() - value))
        assert std.scale[0] == pytest.approx(sigma * GAMMA_R)

    def test_output_std_is_inverse_gamma(self):
        rng = np.random.default_rng(1)
        std = standardize(self.make_rs(rng.normal(size=(5000, 3))))
        np.testing.assert_allclose(
            std.components.std(axis=0), 1.0 / GAMMA_R, rtol=1e-12
        )

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        rs = self.make_rs(rng.normal(size=(1000, 4)) * [1.0, 0.1, 10.0, 3.0])
        back = destandardize(standardize(rs))
        np.testing.assert_allclose(back.components, rs.components, rtol=1e-12)

    def test_degenerate_channel_named(self):
        data = np.random.default_rng(3).normal(size=(100, 2))
        data[:, 1] = 4.2
        with pytest.raises(DataQualityError, match="c1"):
            standardize(self.make_rs(data))


class TestSplitRecords:
    def make_long(self, seconds, fs=10.0, n=2):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(int(seconds * fs), n))
        return RecordSet(
            components=data - data.mean(0),
            sample_rate=fs,
            labels=tuple(f"c{i}" for i in range(n)),
            means=np.zeros(n),
        )

    def test_fifteen_minute_layout(self):
        rs = self.make_long(900.0)
        target, testing = split_records(rs, 600.0, 32.0)
        assert target.n_samples == 6000
        assert len(testing) == 9
        assert all(t.n_samples == 320 for t in testing)

    def test_partition_no_overlap(self):
        rs = self.make_long(700.0)
        target, testing = split_records(rs, 600.0, 32.0)
        used = target.n_samples + sum(t.n_samples for t in testing)
        assert used <= rs.n_samples
        # testing segments start exactly where the target ends
        first = rs.components[6000:6320]
        np.testing.assert_allclose(
            testing[0].components, first - first.mean(0), atol=1e-15
        )

    def test_exact_fit(self):
        rs = self.make_long(640.0)
        target, testing = split_records(rs, 600.0, 32.0)
        assert len(testing) == 1
        # one testing record exactly consumes the remainder minus the tail
        target, testing = split_records(rs, 608.0, 32.0)
        assert len(testing) == 1
        assert target.n_samples + testing[0].n_samples == rs.n_samples

    def test_insufficient_data(self):
        rs = self.make_long(100.0)
        with pytest.raises(DataQualityError, match="632.0 s"):
            split_records(rs, 600.0, 32.0)

    def test_segments_are_zero_mean(self):
        rs = self.make_long(700.0)
        _, testing = split_records(rs, 600.0, 32.0)
        for t in testing:
            np.testing.assert_allclose(t.components.mean(0), 0.0, atol=1e-12)
