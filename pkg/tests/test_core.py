import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbfmean.core import (
    EpisodeMatrix,
    labels_from_onset,
    partition_windows,
    read_episode_csv,
    read_episodes_jsonl,
    sliding_windows,
    window_at,
    write_episode_csv,
    write_episodes_jsonl,
)
from rbfmean.errors import BoundsError, DataError, ShapeError


def make_episode(data, onset=None):
    return EpisodeMatrix(data=np.asarray(data, dtype=float), onset=onset)


class TestEpisodeMatrix:
    def test_rejects_nan(self):
        with pytest.raises(DataError):
            make_episode([[0.0, np.nan]])

    def test_rejects_inf(self):
        with pytest.raises(DataError):
            make_episode([[np.inf, 1.0]])

    def test_rejects_bad_onset(self):
        with pytest.raises(BoundsError):
            make_episode([[1.0, 2.0, 3.0]], onset=3)
        with pytest.raises(BoundsError):
            make_episode([[1.0, 2.0, 3.0]], onset=-1)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            make_episode([1.0, 2.0])

    def test_data_is_read_only(self):
        ep = make_episode([[1.0, 2.0]])
        with pytest.raises(ValueError):
            ep.data[0, 0] = 5.0


class TestWindowAt:
    def test_basic_slice(self):
        ep = make_episode([[0, 1, 2, 3, 4]])
        win = window_at(ep, t=3, w=3)
        assert win.end_time == 3
        np.testing.assert_array_equal(win.data, [[1, 2, 3]])

    def test_too_early(self):
        ep = make_episode([[0, 1, 2, 3, 4]])
        with pytest.raises(BoundsError):
            window_at(ep, t=1, w=3)

    def test_two_dims(self):
        ep = make_episode([[0, 1, 2, 3], [10, 11, 12, 13]])
        win = window_at(ep, t=3, w=2)
        np.testing.assert_array_equal(win.data, [[2, 3], [12, 13]])

    def test_t_out_of_range(self):
        ep = make_episode([[0, 1, 2]])
        with pytest.raises(BoundsError):
            window_at(ep, t=3, w=2)

    def test_w_too_small(self):
        ep = make_episode([[0, 1, 2]])
        with pytest.raises(BoundsError):
            window_at(ep, t=2, w=1)

    @given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=30), st.integers(min_value=0, max_value=100))
    @settings(max_examples=60, deadline=None)
    def test_columns_match_episode(self, w, extra, seed):
        rng = np.random.default_rng(seed)
        T = w + extra
        ep = make_episode(rng.normal(size=(2, T)))
        t = int(rng.integers(w - 1, T))
        win = window_at(ep, t, w)
        for j in range(w):
            np.testing.assert_array_equal(win.data[:, j], ep.data[:, t - w + 1 + j])


class TestPartitionWindows:
    def test_exact_fit(self):
        assert partition_windows(np.arange(10.0), 10).shape == (1, 10)

    def test_remainder_dropped(self):
        parts = partition_windows(np.arange(25.0), 10)
        assert parts.shape == (2, 10)
        np.testing.assert_array_equal(parts[0], np.arange(10.0))
        np.testing.assert_array_equal(parts[1], np.arange(10.0, 20.0))

    def test_too_short(self):
        with pytest.raises(BoundsError):
            partition_windows(np.arange(9.0), 10)

    @given(st.integers(min_value=2, max_value=9), st.integers(min_value=0, max_value=40), st.integers(min_value=0, max_value=100))
    @settings(max_examples=60, deadline=None)
    def test_count_and_concat(self, w, extra, seed):
        rng = np.random.default_rng(seed)
        T = w + extra
        series = rng.normal(size=T)
        parts = partition_windows(series, w)
        assert parts.shape[0] == T // w
        np.testing.assert_array_equal(parts.reshape(-1), series[: (T // w) * w])


class TestSlidingWindows:
    def test_count_and_alignment(self):
        series = np.arange(6.0)
        wins = sliding_windows(series, 3)
        assert wins.shape == (4, 3)
        np.testing.assert_array_equal(wins[0], [0, 1, 2])
        np.testing.assert_array_equal(wins[-1], [3, 4, 5])

    def test_too_short(self):
        with pytest.raises(BoundsError):
            sliding_windows(np.arange(2.0), 3)


class TestLabels:
    def test_onset_mid(self):
        np.testing.assert_array_equal(labels_from_onset(5, 3), [0, 0, 0, 1, 1])

    def test_no_onset(self):
        np.testing.assert_array_equal(labels_from_onset(5, None), [0, 0, 0, 0, 0])

    def test_onset_zero(self):
        np.testing.assert_array_equal(labels_from_onset(5, 0), [1, 1, 1, 1, 1])

    def test_onset_out_of_range(self):
        with pytest.raises(BoundsError):
            labels_from_onset(5, 5)

    @given(st.integers(min_value=1, max_value=200), st.data())
    @settings(max_examples=60, deadline=None)
    def test_sum_is_T_minus_onset(self, T, data):
        onset = data.draw(st.integers(min_value=0, max_value=T - 1))
        assert labels_from_onset(T, onset).sum() == T - onset


class TestEpisodeFiles:
    def test_jsonl_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        episodes = [
            EpisodeMatrix(data=rng.normal(size=(3, 7)), onset=4, meta={"plant": "x", "index": 1}),
            EpisodeMatrix(data=rng.normal(size=(3, 5))),
        ]
        path = tmp_path / "eps.jsonl"
        write_episodes_jsonl(path, episodes)
        loaded = read_episodes_jsonl(path)
        assert len(loaded) == 2
        for orig, back in zip(episodes, loaded):
            np.testing.assert_array_equal(orig.data, back.data)
            assert orig.onset == back.onset
            assert back.meta == orig.meta

    def test_jsonl_shape_mismatch(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps({"n": 2, "t": 3, "onset": None, "meta": {}, "data": [[1, 2, 3]]}) + "\n")
        with pytest.raises(ShapeError):
            read_episodes_jsonl(path)

    def test_jsonl_invalid_json(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json\n")
        with pytest.raises(DataError):
            read_episodes_jsonl(path)

    def test_csv_round_trip_with_labels(self, tmp_path):
        rng = np.random.default_rng(1)
        ep = EpisodeMatrix(data=rng.normal(size=(2, 6)), onset=4)
        path = tmp_path / "ep.csv"
        write_episode_csv(path, ep)
        header = path.read_text().splitlines()[0]
        assert header == "dim_0,dim_1"
        sidecar = tmp_path / "ep.labels.csv"
        labels = [int(v) for v in sidecar.read_text().splitlines()[1:]]
        assert labels == [0, 0, 0, 0, 1, 1]
        back = read_episode_csv(path, onset=4)
        np.testing.assert_array_equal(back.data, ep.data)
