import numpy as np
import pytest

from evflow.errors import EventParseError
from evflow.events import (EventStream, edi_propagate, integrate, load_events,
                           save_events, theta2)


def make_stream(records, width=8, height=8):
    recs = sorted(records, key=lambda r: r[0])
    t, x, y, p = (np.array(col) for col in zip(*recs)) if recs else (
        np.empty(0), np.empty(0, int), np.empty(0, int), np.empty(0, int))
    return EventStream(t=t, x=x, y=y, polarity=p, width=width, height=height)


def test_load_empty_file(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("")
    stream = load_events(path, width=4, height=4)
    assert len(stream) == 0


def test_load_single_event(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("0.01 5 3 1\n")
    stream = load_events(path)
    assert len(stream) == 1
    assert stream.t[0] == 0.01
    assert stream.x[0] == 5 and stream.y[0] == 3
    assert stream.polarity[0] == 1


def test_load_maps_zero_polarity_to_minus_one(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("0.5 1 1 0\n")
    assert load_events(path).polarity[0] == -1


def test_load_sorts_by_time(tmp_path):
    path = tmp_path / "ev.txt"
    lines = ["0.3 1 0 1", "0.1 2 0 0", "0.2 0 1 1"]
    path.write_text("\n".join(lines) + "\n")
    stream = load_events(path, width=4, height=4)
    assert len(stream) == 3
    expected = sorted([0.3, 0.1, 0.2])
    assert list(stream.t) == expected


def test_load_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("0.1 0 0 1\nbogus line\n")
    with pytest.raises(EventParseError) as exc:
        load_events(path)
    assert exc.value.line_no == 2


def test_load_out_of_bounds_pixel(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("0.1 9 0 1\n")
    with pytest.raises(EventParseError):
        load_events(path, width=8, height=8)


def test_load_bad_polarity(tmp_path):
    path = tmp_path / "ev.txt"
    path.write_text("0.1 0 0 2\n")
    with pytest.raises(EventParseError):
        load_events(path)


def test_save_load_round_trip(tmp_path, rng):
    n = 50
    stream = make_stream([(float(t), int(x), int(y), int(p))
                          for t, x, y, p in zip(np.sort(rng.random(n)),
                                                rng.integers(0, 8, n),
                                                rng.integers(0, 8, n),
                                                rng.choice([-1, 1], n))])
    path = tmp_path / "ev.txt"
    save_events(stream, path)
    back = load_events(path, width=8, height=8)
    assert np.allclose(back.t, stream.t, atol=1e-9)
    assert np.array_equal(back.x, stream.x)
    assert np.array_equal(back.polarity, stream.polarity)


def test_integrate_empty_window():
    stream = make_stream([(0.5, 1, 1, 1)])
    assert np.all(integrate(stream, 0.0, 0.4) == 0.0)


def test_integrate_signed_count():
    stream = make_stream([(0.1, 2, 3, 1), (0.2, 2, 3, 1), (0.3, 2, 3, -1)])
    frame = integrate(stream, 0.0, 1.0)
    assert frame[3, 2] == 1.0
    assert frame.sum() == 1.0


def test_integrate_window_half_open():
    stream = make_stream([(0.5, 1, 1, 1)])
    # event exactly at the left edge is excluded, at the right edge included
    assert integrate(stream, 0.5, 1.0)[1, 1] == 0.0
    assert integrate(stream, 0.0, 0.5)[1, 1] == 1.0


def test_integrate_additive_and_antisymmetric(rng):
    n = 200
    stream = make_stream([(float(t), int(x), int(y), int(p))
                          for t, x, y, p in zip(np.sort(rng.random(n)),
                                                rng.integers(0, 8, n),
                                                rng.integers(0, 8, n),
                                                rng.choice([-1, 1], n))])
    f, m, t = 0.1, 0.45, 0.9
    total = integrate(stream, f, m) + integrate(stream, m, t)
    assert np.array_equal(total, integrate(stream, f, t))
    assert np.array_equal(integrate(stream, t, f), -integrate(stream, f, t))


def test_edi_propagate_identity():
    L = np.random.default_rng(0).random((4, 4))
    assert np.array_equal(edi_propagate(L, np.zeros((4, 4)), 0.2), L)


def test_edi_propagate_closed_form():
    L = np.full((2, 2), 0.5)
    up = edi_propagate(L, np.full((2, 2), 3.0), 0.2)
    down = edi_propagate(L, np.full((2, 2), -3.0), 0.2)
    assert np.allclose(up, 0.5 * np.exp(0.6))
    assert np.allclose(down, 0.5 * np.exp(-0.6))
    assert abs(up[0, 0] - 0.91106) < 1e-4
    assert abs(down[0, 0] - 0.27441) < 1e-4


def test_edi_propagate_round_trip(rng):
    L = rng.random((8, 8)) + 0.05
    E = rng.integers(-5, 6, (8, 8)).astype(float)
    back = edi_propagate(edi_propagate(L, E, 0.22), -E, 0.22)
    assert np.all(np.abs(back - L) / L < 1e-12)


def test_theta2_closed_forms():
    assert theta2(np.zeros((2, 2)), 0.2).max() == 0.0
    assert abs(theta2(np.ones((1, 1)), 0.2)[0, 0] - 0.22140) < 1e-4
    assert abs(theta2(-np.ones((1, 1)), 0.2)[0, 0] + 0.18127) < 1e-4


def test_theta2_matches_edi_of_unit_grid(rng):
    E = rng.integers(-4, 5, (6, 6)).astype(float)
    ones = np.ones((6, 6))
    assert np.allclose(theta2(E, 0.22), edi_propagate(ones, E, 0.22) - 1.0,
                       atol=1e-12)


def test_stream_requires_sorted_times():
    with pytest.raises(ValueError):
        EventStream(t=np.array([0.2, 0.1]), x=np.array([0, 0]),
                    y=np.array([0, 0]), polarity=np.array([1, 1]),
                    width=2, height=2)
