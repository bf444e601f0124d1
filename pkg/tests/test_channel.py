import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellfree_los.channel import (
    UpaGeometry,
    attenuation,
    channel_tensor,
    direction_cosines,
    exact_channel,
    local_channel,
    prop_phase,
    steering_farfield,
)
from cellfree_los.scenario import (
    ApDescriptor,
    GlobalConfig,
    UeDescriptor,
    element_positions,
    generate_scenario,
    link_geometry,
)

LAM = 0.01


def wrap(x):
    return np.angle(np.exp(1j * x))


def test_attenuation_examples():
    assert attenuation(LAM / (4 * np.pi), LAM) == pytest.approx(1.0)
    assert attenuation(100.0, 0.01) == pytest.approx(7.9577e-6, rel=1e-5)
    assert attenuation(80.0, LAM) == pytest.approx(attenuation(40.0, LAM) / 2)


@pytest.mark.parametrize("fn", [attenuation, prop_phase])
@pytest.mark.parametrize("d", [0.0, -3.0])
def test_nonpositive_distance_rejected(fn, d):
    with pytest.raises(ValueError):
        fn(d, LAM)


def test_prop_phase_examples():
    for q in (1, 7, 12345):
        assert wrap(prop_phase(q * LAM, LAM)) == pytest.approx(0.0, abs=1e-8)
    assert abs(wrap(prop_phase(LAM / 2, LAM))) == pytest.approx(np.pi)
    assert prop_phase(3.2, LAM) + prop_phase(1.7, LAM) == pytest.approx(prop_phase(4.9, LAM))


def _cfg(n_ap):
    return GlobalConfig(M=1, N_ap=n_ap, K=1, carrier_freq=29_979_245_800.0)  # lambda = 1 cm


def test_single_element_channel():
    cfg = _cfg(1)
    ap = ApDescriptor((0.0, 0.0, 12.5), 0.4, 1, 1)
    ue = UeDescriptor((30.0, 40.0, 1.5))
    d = np.sqrt(2621)
    expected = attenuation(d, cfg.wavelength) * np.exp(1j * (prop_phase(d, cfg.wavelength) + 0.3))
    np.testing.assert_allclose(exact_channel(ap, ue, 0.3, cfg), [expected], rtol=1e-9)


def test_sync_phase_factorises():
    cfg = _cfg(25)
    ap = ApDescriptor((0.0, 0.0, 12.5), 1.1, 5, 5)
    ue = UeDescriptor((20.0, -7.0, 1.2))
    np.testing.assert_allclose(exact_channel(ap, ue, np.pi, cfg), -exact_channel(ap, ue, 0.0, cfg), rtol=1e-12)


def test_magnitudes_increase_when_approaching():
    cfg = _cfg(9)
    ap = ApDescriptor((0.0, 0.0, 12.5), 0.0, 3, 3)
    direction = np.array([0.3, 0.9, -0.3]) / np.linalg.norm([0.3, 0.9, -0.3])
    mags = [
        np.abs(exact_channel(ap, UeDescriptor(tuple(np.array(ap.position) + r * direction)), 0.0, cfg))
        for r in (200.0, 100.0, 50.0, 10.0, 2.0)
    ]
    assert all(np.all(b > a) for a, b in zip(mags, mags[1:]))


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_per_element_magnitude_is_attenuation(seed):
    scn = generate_scenario(GlobalConfig(M=4, N_ap=9, K=3, area_side=250.0), seed)
    g = channel_tensor(scn)
    for m, ap in enumerate(scn.aps):
        d = np.linalg.norm(scn.ue_positions[:, None] - element_positions(ap, scn.config.spacing)[None], axis=-1)
        np.testing.assert_allclose(np.abs(g[:, m]), attenuation(d, scn.config.wavelength), rtol=1e-12)


def test_channel_tensor_matches_per_link():
    scn = generate_scenario(GlobalConfig(M=3, N_ap=4, K=2), 1)
    g = channel_tensor(scn)
    for k, ue in enumerate(scn.ues):
        for m, ap in enumerate(scn.aps):
            np.testing.assert_allclose(g[k, m], exact_channel(ap, ue, 0.0, scn.config), rtol=1e-12)


def test_steering_broadside_all_ones():
    np.testing.assert_allclose(steering_farfield(4, 4, 0.005, LAM, 0.0, 0.0), np.ones(16))


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.sampled_from([1, 2, 5, 10]))
def test_steering_norm(az, el, side):
    a = steering_farfield(side, side, 0.005, LAM, az, el)
    assert np.sum(np.abs(a) ** 2) == pytest.approx(side * side)
    assert a[0] == pytest.approx(1.0)


def test_steering_endfire_half_wavelength():
    a = steering_farfield(1, 2, LAM / 2, LAM, np.pi / 2, 0.0)
    np.testing.assert_allclose(np.angle(a[0]), 0.0, atol=1e-12)
    assert abs(np.angle(a[1])) == pytest.approx(np.pi)


def test_local_channel_equal_magnitudes():
    arr = UpaGeometry(5, 5, 0.005, LAM)
    h = local_channel(73.0, 0.3, -0.2, 1.0, arr)
    np.testing.assert_allclose(np.abs(h), attenuation(73.0, LAM), rtol=1e-12)


def test_point_array_local_equals_exact():
    cfg = _cfg(1)
    ap = ApDescriptor((10.0, 10.0, 12.5), 2.0, 1, 1)
    ue = UeDescriptor((60.0, -30.0, 1.7))
    d, az, el = link_geometry(ap, ue)
    np.testing.assert_allclose(
        local_channel(d, az, el, 0.9, UpaGeometry.from_config(cfg)), exact_channel(ap, ue, 0.9, cfg), rtol=1e-9
    )


def _farfield_error(distance, rng, n=40):
    cfg = _cfg(100)
    arr = UpaGeometry.from_config(cfg)
    errs = []
    for _ in range(n):
        ap = ApDescriptor((0.0, 0.0, 12.5), rng.uniform(0, 2 * np.pi), 10, 10)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        ue = UeDescriptor(tuple(np.array(ap.position) + distance * direction))
        d, az, el = link_geometry(ap, ue)
        h = exact_channel(ap, ue, 0.0, cfg)
        errs.append(np.linalg.norm(h - local_channel(d, az, el, 0.0, arr)) / np.linalg.norm(h))
    return np.array(errs)


def test_far_field_limit():
    cfg = _cfg(100)
    aperture = np.hypot(9, 9) * cfg.spacing
    fraunhofer = 2 * aperture**2 / cfg.wavelength
    rng = np.random.default_rng(0)
    e10 = _farfield_error(10 * fraunhofer, rng)
    e100 = _farfield_error(100 * fraunhofer, rng)
    e1000 = _farfield_error(1000 * fraunhofer, rng)
    # error decays like 1/d (curvature across a corner-referenced aperture)
    assert np.median(e10) / np.median(e100) == pytest.approx(10, rel=0.25)
    assert np.median(e100) / np.median(e1000) == pytest.approx(10, rel=0.25)
    assert e1000.max() < 1e-3


def test_virtual_array_keeps_wavefront_curvature():
    """APs serving a UE jointly see a curved wavefront that no plane wave fits,
    while each AP alone is well described by the far-field model."""
    cfg = GlobalConfig(M=9, N_ap=4, K=1, area_side=100.0)
    scn = generate_scenario(cfg, 2)
    g = channel_tensor(scn)[0]  # (M, N)
    arr = UpaGeometry.from_config(cfg)
    for m, ap in enumerate(scn.aps):
        d, az, el = link_geometry(ap, scn.ues[0])
        hl = local_channel(d, az, el, 0.0, arr)
        assert abs(np.vdot(hl, g[m])) / (np.linalg.norm(hl) * np.linalg.norm(g[m])) > 0.999

    pos = np.concatenate([element_positions(ap, cfg.spacing) for ap in scn.aps])
    centre = pos.mean(axis=0)
    ue = np.asarray(scn.ues[0].position)
    aperture = np.max(np.linalg.norm(pos[:, None] - pos[None], axis=-1))
    assert np.linalg.norm(ue - centre) < 2 * aperture**2 / cfg.wavelength

    # plane wave the whole array would assume from its centroid
    u = (ue - centre) / np.linalg.norm(ue - centre)
    plane = np.exp(2j * np.pi / cfg.wavelength * ((pos - centre) @ u))
    residual = np.angle(g.ravel() * np.conj(plane))
    assert abs(np.mean(np.exp(1j * residual))) < 0.5
    # per-AP residual phase varies by many radians across the virtual array
    per_ap = np.angle(np.exp(1j * residual.reshape(cfg.M, -1)[:, 0]))
    assert np.ptp(per_ap) > np.pi / 2


def test_direction_cosines_round_trip():
    from cellfree_los.channel import angles_from_cosines

    az, el = 0.4, -0.3
    u, v = direction_cosines(az, el)
    np.testing.assert_allclose(angles_from_cosines(u, v), (az, el), atol=1e-12)
