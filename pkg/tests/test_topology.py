import pytest

from aqtlab.topology import PathTopology, Route, ValidationError, make_path, route_contains


def test_smallest_path():
    p = make_path(1, 1)
    assert p.n == 1 and p.destination == 2 and list(p.buffers) == [1]


def test_ten_buffer_path():
    assert list(make_path(10).buffers) == list(range(1, 11))
    assert make_path(10).destination == 11


def test_lower_bound_size():
    assert make_path(64).n == 64


@pytest.mark.parametrize("n,c", [(0, 1), (-3, 1), (4, 0), (4, 1.5)])
def test_rejects_bad_shape(n, c):
    with pytest.raises(ValidationError):
        PathTopology(n, c)


@pytest.mark.parametrize("e,expected", [(5, True), (2, False), (3, True)])
def test_route_contains(e, expected):
    assert route_contains(Route(3), e) is expected
    assert Route(3).contains(e) is expected


def test_route_origin_positive():
    with pytest.raises(ValidationError):
        Route(0)


def test_check_buffer():
    p = make_path(3)
    assert p.check_buffer(3) == 3
    with pytest.raises(ValidationError):
        p.check_buffer(4)
