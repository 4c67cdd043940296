import math
import random

import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from meetdurian.geo import (
    AnnulusSpec,
    GeoPoint,
    LocalFrame,
    destination_point,
    from_local,
    haversine_distance,
    initial_bearing,
    sample_annulus,
    sample_annulus_naive,
    to_local,
)

# small-area strategy so planar-frame contracts apply
lat_st = st.floats(min_value=35.0, max_value=37.0)
lon_st = st.floats(min_value=119.0, max_value=121.0)
point_st = st.builds(GeoPoint, lat=lat_st, lon=lon_st)


class TestGeoPoint:
    def test_rejects_out_of_range_latitude(self):
        with pytest.raises(ValueError):
            GeoPoint(lat=91.0, lon=0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            GeoPoint(lat=float("nan"), lon=0.0)


class TestHaversine:
    def test_identity_is_zero(self):
        p = GeoPoint(lat=36.07, lon=120.34)
        assert haversine_distance(p, p) == 0.0

    def test_one_degree_longitude_at_equator(self):
        # 2*pi*R/360 with R = 6371000
        d = haversine_distance(GeoPoint(0, 0), GeoPoint(0, 1))
        assert d == pytest.approx(111_195, abs=5)

    def test_quarter_meridian(self):
        # pi*R/2
        d = haversine_distance(GeoPoint(0, 0), GeoPoint(90, 0))
        assert d == pytest.approx(10_007_543, abs=10)

    @given(a=point_st, b=point_st)
    def test_symmetry(self, a, b):
        assert haversine_distance(a, b) == pytest.approx(haversine_distance(b, a), abs=1e-6)

    @given(a=point_st, b=point_st, c=point_st)
    def test_triangle_inequality(self, a, b, c):
        ab = haversine_distance(a, b)
        bc = haversine_distance(b, c)
        ac = haversine_distance(a, c)
        assert ac <= ab + bc + 1e-6


class TestDestinationPoint:
    def test_zero_distance_is_identity(self):
        p = GeoPoint(lat=36.07, lon=120.34)
        assert destination_point(p, 123.0, 0.0) == p

    def test_east_along_equator(self):
        p = destination_point(GeoPoint(0, 0), 90.0, 111_195.0)
        assert p.lat == pytest.approx(0.0, abs=1e-4)
        assert p.lon == pytest.approx(1.0, abs=1e-4)

    def test_rejects_negative_distance(self):
        with pytest.raises(ValueError):
            destination_point(GeoPoint(0, 0), 0.0, -1.0)

    @given(
        origin=point_st,
        bearing=st.floats(min_value=0.0, max_value=360.0),
        distance=st.floats(min_value=0.0, max_value=5000.0),
    )
    def test_round_trip_distance(self, origin, bearing, distance):
        dest = destination_point(origin, bearing, distance)
        assert haversine_distance(origin, dest) == pytest.approx(
            distance, rel=1e-3, abs=1e-6
        )


class TestLocalFrame:
    def test_origin_maps_to_zero(self, center):
        frame = LocalFrame.at(center)
        assert to_local(frame, center) == (0.0, 0.0)

    def test_cos_latitude_scaling(self, center):
        frame = LocalFrame.at(center)
        expected = frame.meters_per_deg_lat * math.cos(math.radians(center.lat))
        assert frame.meters_per_deg_lon == pytest.approx(expected, rel=1e-9)

    def test_round_trip_identity(self, center):
        frame = LocalFrame.at(center)
        rng = random.Random(7)
        for _ in range(1000):
            p = destination_point(center, rng.uniform(0, 360), rng.uniform(0, 2000))
            q = from_local(frame, to_local(frame, p))
            assert q.lat == pytest.approx(p.lat, abs=1e-7)
            assert q.lon == pytest.approx(p.lon, abs=1e-7)

    def test_planar_distance_matches_haversine(self, center):
        frame = LocalFrame.at(center)
        rng = random.Random(8)
        for _ in range(500):
            a = destination_point(center, rng.uniform(0, 360), rng.uniform(0, 2000))
            b = destination_point(center, rng.uniform(0, 360), rng.uniform(0, 2000))
            ax, ay = to_local(frame, a)
            bx, by = to_local(frame, b)
            planar = math.hypot(bx - ax, by - ay)
            true = haversine_distance(a, b)
            if true > 1.0:
                assert planar == pytest.approx(true, rel=5e-3)


class TestAnnulusSampling:
    def test_spec_validation(self, center):
        with pytest.raises(ValueError):
            AnnulusSpec(center=center, r_min=0.0, r_max=100.0)
        with pytest.raises(ValueError):
            AnnulusSpec(center=center, r_min=200.0, r_max=100.0)
        with pytest.raises(ValueError):
            AnnulusSpec(center=center, r_min=30.0, r_max=6000.0)

    def test_every_sample_in_range(self, center):
        spec = AnnulusSpec(center=center, r_min=30.0, r_max=200.0)
        rng = random.Random(1)
        for _ in range(100_000):
            d = haversine_distance(center, sample_annulus(spec, rng))
            assert 30.0 <= d <= 200.0 + 1e-6

    def test_angular_uniformity(self, center):
        spec = AnnulusSpec(center=center, r_min=30.0, r_max=200.0)
        rng = random.Random(2)
        counts = [0] * 8
        for _ in range(10_000):
            p = sample_annulus(spec, rng)
            counts[int(initial_bearing(center, p) / 45.0) % 8] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    @staticmethod
    def _radial_band_counts(center, sampler, spec, n, seed, bands=4):
        rng = random.Random(seed)
        counts = [0] * bands
        lo2, hi2 = spec.r_min**2, spec.r_max**2
        for _ in range(n):
            r = haversine_distance(center, sampler(spec, rng))
            u = (r * r - lo2) / (hi2 - lo2)
            counts[min(bands - 1, int(u * bands))] += 1
        return counts

    def test_equal_area_radial_uniformity(self, center):
        spec = AnnulusSpec(center=center, r_min=30.0, r_max=200.0)
        counts = self._radial_band_counts(center, sample_annulus, spec, 10_000, 3)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_naive_sampler_fails_radial_uniformity(self, center):
        # negative control: linear-in-radius sampling overweights inner bands
        spec = AnnulusSpec(center=center, r_min=30.0, r_max=200.0)
        counts = self._radial_band_counts(center, sample_annulus_naive, spec, 10_000, 4)
        assert stats.chisquare(counts).pvalue < 0.01

    def test_seeded_determinism(self, center):
        spec = AnnulusSpec(center=center, r_min=30.0, r_max=200.0)
        runs = [
            [sample_annulus(spec, random.Random(99)) for _ in range(50)]
            for _ in range(2)
        ]
        assert runs[0] == runs[1]
