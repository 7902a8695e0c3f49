import numpy as np
import pytest

from hge import (
    Frame,
    FrameStream,
    Handedness,
    InsufficientWindow,
    build_dataset,
    generate,
    make_canonical_script,
    rows_to_csv,
)
from hge.mlprep import DATASET_HEADER

from helpers import make_hand


def static_two_hand_window(grab=0.6, tip_spacing=25.66, n=120, dt=10):
    frames = []
    for i in range(n):
        left = make_hand(Handedness.LEFT, palm=(-60, 200, 0), normal=(1, 0, 0),
                         grab=grab, tip_spacing=tip_spacing)
        right = make_hand(Handedness.RIGHT, palm=(60, 200, 0), normal=(-1, 0, 0),
                          grab=grab, tip_spacing=tip_spacing)
        frames.append(Frame(i * dt, (left, right)))
    return FrameStream(frames, 100.0)


class TestBuildDataset:
    def test_sample_row_reproduces_measured_values(self):
        window = static_two_hand_window(grab=0.6, tip_spacing=25.66)
        rows = build_dataset([(window, "Hands Palm to palm")])
        assert len(rows) == 1
        row = rows[0]
        assert row.sample_no == 1
        assert row.hand_curvature_left == pytest.approx(0.6)
        assert row.hand_curvature_right == pytest.approx(0.6)
        assert row.fingertip_distance_left == pytest.approx(25.66)
        assert row.fingertip_distance_right == pytest.approx(25.66)
        assert row.gesture_class == "Hands Palm to palm"

    def test_empty_input_empty_dataset(self):
        assert build_dataset([]) == []

    def test_sample_numbers_contiguous(self):
        w = static_two_hand_window()
        rows = build_dataset([(w, "Hands Palm to palm"),
                              (w, "Palm to Palm with fingers interlocked")])
        assert [r.sample_no for r in rows] == [1, 2]
        assert rows[1].gesture_class == "Palm to Palm with fingers interlocked"

    def test_rerun_is_byte_identical(self):
        stream, labels = generate(make_canonical_script(noise_sigma=1.0, seed=6))
        window = stream.slice_ms(0, 1500)
        csv_a = rows_to_csv(build_dataset([(window, "Hands Palm to palm")]))
        csv_b = rows_to_csv(build_dataset([(window, "Hands Palm to palm")]))
        assert csv_a == csv_b

    def test_numeric_cells_finite(self):
        stream, _ = generate(make_canonical_script(noise_sigma=1.0, seed=7))
        rows = build_dataset([(stream.slice_ms(0, 1500), "a"), (stream.slice_ms(1000, 3000), "b")])
        for row in rows:
            for value in (row.hand_curvature_left, row.hand_curvature_right,
                          row.fingertip_distance_left, row.fingertip_distance_right,
                          row.frequency_hz, row.inter_palm_distance_mm):
                if value is not None:
                    assert np.isfinite(value)
            assert 0.0 <= row.hand_curvature_right <= 1.0

    def test_insufficient_window_reports_index(self):
        good = static_two_hand_window()
        tiny = FrameStream(good.frames[:5], 100.0)
        with pytest.raises(InsufficientWindow) as err:
            build_dataset([(good, "a"), (tiny, "b")])
        assert "window 1" in str(err.value)

    def test_empty_label_rejected(self):
        with pytest.raises(ValueError):
            build_dataset([(static_two_hand_window(), "")])

    def test_median_aggregate(self):
        frames = []
        grabs = [0.1, 0.1, 0.1, 0.9]
        for i in range(120):
            frames.append(Frame(i * 10, (make_hand(Handedness.RIGHT, grab=grabs[i % 4]),)))
        window = FrameStream(frames, 100.0)
        mean_row = build_dataset([(window, "x")], aggregate="mean")[0]
        median_row = build_dataset([(window, "x")], aggregate="median")[0]
        assert mean_row.hand_curvature_right == pytest.approx(0.3)
        assert median_row.hand_curvature_right == pytest.approx(0.1)

    def test_missing_hand_gives_empty_cells(self):
        frames = [Frame(i * 10, (make_hand(Handedness.RIGHT),)) for i in range(120)]
        row = build_dataset([(FrameStream(frames, 100.0), "x")])[0]
        assert row.hand_curvature_left is None
        csv_text = rows_to_csv([row])
        assert csv_text.splitlines()[1].split(",")[1] == ""


class TestCsvShape:
    def test_header(self):
        assert rows_to_csv([]).splitlines()[0] == DATASET_HEADER
        assert DATASET_HEADER == "sample_no,curv_l,curv_r,ftd_l,ftd_r,orient,traj,freq_hz,ipd_mm,label"

    def test_row_cells(self):
        window = static_two_hand_window(grab=0.6, tip_spacing=25.66)
        text = rows_to_csv(build_dataset([(window, "Hands Palm to palm")]))
        cells = text.splitlines()[1].split(",")
        assert cells[0] == "1"
        assert cells[1] == "0.6"
        assert cells[3] == "25.66"
        assert cells[-1] == "Hands Palm to palm"
