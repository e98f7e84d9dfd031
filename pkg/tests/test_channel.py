import numpy as np
import pytest

from cesbl_ra.channel import (
    ChannelParams,
    array_response,
    assemble_channel,
    draw_user,
    format_ground_truth,
    sample_actives,
)


def test_broadside_response_is_all_ones():
    np.testing.assert_allclose(array_response(0.0, 4, 0.5), np.ones(4))


def test_endfire_response():
    np.testing.assert_allclose(array_response(np.pi / 2, 2, 0.5), [1, -1], atol=1e-12)


def test_response_unit_modulus_and_conjugate_symmetry(rng):
    for angle in rng.uniform(-np.pi / 2, np.pi / 2, 50):
        a = array_response(angle, 16, 0.5)
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)
        assert a[0] == 1
        np.testing.assert_allclose(array_response(-angle, 16, 0.5), np.conj(a), atol=1e-12)


def test_single_path_degenerate_channel():
    params = ChannelParams(M=8, L_path=1, delta_deg=0.0)
    h = assemble_channel(np.array([1.0]), np.array([0.3]), np.array([0.0]), params)
    np.testing.assert_allclose(h, array_response(0.3, 8, 0.5))


def test_draw_user_respects_cluster_and_delay_bounds(rng):
    params = ChannelParams(M=16)
    for _ in range(200):
        u = draw_user(params, n_pilots=8, t_m=3, rng=rng)
        assert 0 <= u.pilot_index < 8 and 0 <= u.frame_delay <= 3
        assert np.all(np.abs(u.angles - u.center_angle) <= params.delta + 1e-12)
        assert -np.pi / 2 < u.center_angle < np.pi / 2
        np.testing.assert_allclose(u.channel, assemble_channel(u.gains, u.angles, u.tap_delays, params))
        assert np.all(np.isfinite(u.channel))


def test_zero_max_delay_means_zero_delay(rng):
    params = ChannelParams(M=4)
    assert all(draw_user(params, 4, 0, rng).frame_delay == 0 for _ in range(50))


def test_mean_channel_energy_matches_path_count():
    # each path contributes E|g|^2 * ||a||^2 = M
    params = ChannelParams(M=64)
    rng = np.random.default_rng(1)
    energies = [np.sum(np.abs(draw_user(params, 64, 4, rng).channel) ** 2) for _ in range(10_000)]
    assert abs(np.mean(energies) / (64 * 16) - 1) < 0.05


def test_per_antenna_variance_equals_path_count():
    params = ChannelParams(M=4, L_path=16)
    rng = np.random.default_rng(2)
    H = np.array([draw_user(params, 4, 0, rng).channel for _ in range(10_000)])
    var = np.mean(np.abs(H) ** 2, axis=0)
    # h_m is CN(0, 16), so |h_m|^2 is exponential with sd 16
    assert np.all(np.abs(var - 16) < 3 * 16 / np.sqrt(10_000))


def test_collision_count_matches_birthday_expectation():
    params = ChannelParams(M=2, L_path=1)
    rng = np.random.default_rng(3)
    counts, pairs = [], []
    for _ in range(2000):
        users = sample_actives(30, params, 64, 4, rng)
        keys = [(u.pilot_index, u.frame_delay) for u in users]
        counts.append(sum(1 for k in set(keys) if keys.count(k) >= 2))
        pairs.append(sum(keys[i] == keys[j] for i in range(30) for j in range(i)))
    # oracles over 320 equiprobable bins: colliding user pairs C(30,2)/320,
    # and bins hit by >= 2 users 320 (1 - P[0 hits] - P[1 hit])
    bins, K = 320, 30
    assert abs(np.mean(pairs) - K * (K - 1) / (2 * bins)) < 0.1
    p0 = (1 - 1 / bins) ** K
    p1 = K * (1 / bins) * (1 - 1 / bins) ** (K - 1)
    assert abs(np.mean(counts) - bins * (1 - p0 - p1)) < 0.1


def test_sample_actives_determinism_and_length():
    params = ChannelParams(M=8)
    a = sample_actives(30, params, 64, 4, np.random.default_rng(5))
    b = sample_actives(30, params, 64, 4, np.random.default_rng(5))
    assert len(a) == 30 and len(sample_actives(1, params, 64, 4, np.random.default_rng(0))) == 1
    for u, v in zip(a, b):
        assert (u.pilot_index, u.frame_delay) == (v.pilot_index, v.frame_delay)
        assert np.array_equal(u.channel, v.channel)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        ChannelParams(M=0)
    with pytest.raises(ValueError):
        ChannelParams(delta_deg=90)
    with pytest.raises(ValueError):
        sample_actives(0, ChannelParams(M=4), 4, 0, np.random.default_rng())


def test_ground_truth_dump_has_one_line_per_user(rng):
    users = sample_actives(3, ChannelParams(M=4), 8, 2, rng)
    lines = format_ground_truth(users).splitlines()
    assert len(lines) == 3
    fields = lines[0].split()
    assert len(fields) == 3 + 2 * 4
    assert complex(float(fields[3]), float(fields[4])) == users[0].channel[0]
