import pytest

from aqtlab.render import parse_sweep_csv, render_svg
from aqtlab.topology import ValidationError

HEAD = "n,B,sigma,protocol,peak_load,proof_bound\n"


def rows(protocols=("oed",), ns=(4, 8, 16, 32, 64)):
    body = "".join(f"{n},1,0,{p},{i + 3},{10 * n}\n" for p in protocols for i, n in enumerate(ns))
    return parse_sweep_csv(HEAD + body)


def test_points_per_series():
    svg = render_svg(rows())
    assert svg.count("<polyline") == 1
    assert svg.count("<circle") == 5
    assert len(svg.split('points="')[1].split('"')[0].split()) == 5


def test_two_protocols_two_polylines():
    svg = render_svg(rows(("oed", "greedy")))
    assert svg.count("<polyline") == 2
    assert 'data-protocol="greedy"' in svg and 'data-protocol="oed"' in svg


def test_empty_axes_only():
    svg = render_svg(parse_sweep_csv(HEAD))
    assert svg.count('class="axis"') == 2 and "<polyline" not in svg
    assert render_svg(parse_sweep_csv("")).startswith("<svg")


def test_deterministic():
    assert render_svg(rows(("oed", "greedy"))) == render_svg(rows(("oed", "greedy")))


def test_fractions_accepted():
    r = parse_sweep_csv(HEAD + "4,1,1/2,oed,3,51/2\n")
    assert r[0]["proof_bound"] * 2 == 51


@pytest.mark.parametrize("text", ["n,B\n1,2\n", HEAD + "x,1,0,oed,3,4\n", HEAD + "0,1,0,oed,3,4\n"])
def test_malformed(text):
    with pytest.raises(ValidationError):
        parse_sweep_csv(text)
