from __future__ import annotations

import json
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conewave.errors import DomainError
from conewave.spectrum import (
    LADDER_CSV_HEADER,
    LinkSpectrum,
    circle_spectrum,
    explicit_spectrum,
    exponent_ladder,
    is_half_integer,
    ladder_to_csv,
    load_spectrum_json,
    merge_duplicates,
    mode_ladder,
    nu_of,
    resonances,
)


def _brute_force_pairs(n, spec, depth):
    """Double loop over (j, k) with generous bounds."""
    found = set()
    for j, (mu_sq, _) in enumerate(spec.entries):
        nu = math.sqrt(((n - 2) / 2) ** 2 + mu_sq)
        for k in range(int(depth) + 2):
            if 0.5 + k + nu < depth:
                found.add((j, k))
    return found


# -- circle_spectrum / explicit spectra --------------------------------------

def test_circle_spectrum_unit_radius():
    assert circle_spectrum(1.0, 2).entries == ((0.0, 1), (1.0, 2), (4.0, 2))


def test_circle_spectrum_radius_two():
    assert circle_spectrum(2.0, 1).entries == ((0.0, 1), (0.25, 2))


@pytest.mark.parametrize("alpha", [0.0, -1.0, float("nan")])
def test_circle_spectrum_rejects_bad_alpha(alpha):
    with pytest.raises(DomainError):
        circle_spectrum(alpha, 1)


def test_link_spectrum_invariants():
    with pytest.raises(DomainError):
        explicit_spectrum([[1.0, 1]])  # no constant mode
    with pytest.raises(DomainError):
        explicit_spectrum([[0.0, 1], [2.0, 1], [2.0, 1]])  # duplicate
    with pytest.raises(DomainError):
        explicit_spectrum([[0.0, 1], [3.0, 2], [2.0, 1]])  # unsorted
    with pytest.raises(DomainError):
        explicit_spectrum([[0.0, 1], [2.0, 0]])


def test_load_spectrum_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps([[0, 1], [2.0, 3]]))
    spec = load_spectrum_json(path)
    assert spec.entries == ((0.0, 1), (2.0, 3))
    with pytest.raises(DomainError):
        load_spectrum_json(tmp_path / "missing.json")


# -- nu_of ------------------------------------------------------------------

@pytest.mark.parametrize(
    "n, mu_sq, expected",
    [(2, 0.0, 0.0), (4, 0.0, 1.0), (3, 2.0, 1.5)],
)
def test_nu_of_examples(n, mu_sq, expected):
    assert nu_of(n, mu_sq) == pytest.approx(expected, abs=1e-15)


def test_nu_of_rejects_low_dimension():
    with pytest.raises(DomainError):
        nu_of(1, 0.0)


@given(st.integers(min_value=2, max_value=12), st.floats(min_value=0.0, max_value=1e6))
def test_nu_squared_identity(n, mu_sq):
    nu = nu_of(n, mu_sq)
    target = ((n - 2) / 2) ** 2
    assert abs((nu * nu - mu_sq) - target) <= 1e-12 * max(1.0, nu * nu)


# -- resonances -------------------------------------------------------------

def test_resonances_unit_circle_n2():
    ladder = resonances(2, circle_spectrum(1.0, 3), 2.0)
    by_pair = {(res.j, res.k): res for res in ladder}
    r00 = by_pair[(0, 0)]
    assert r00.sigma == complex(0, -0.5) and r00.multiplicity == 1 and not r00.excluded
    assert by_pair[(0, 1)].sigma == complex(0, -1.5)
    assert by_pair[(1, 0)].sigma == complex(0, -1.5)
    assert by_pair[(1, 0)].multiplicity == 2


def test_resonances_half_integer_excluded():
    ladder = resonances(3, explicit_spectrum([[0.0, 1]]), 2.0)
    first = ladder.items[0]
    assert first.sigma == complex(0, -1.0)
    assert first.nu == 0.5
    assert first.excluded


def test_resonances_alpha_07_leading_mode_one():
    # oracle: 50-digit evaluation of 1/2 + 1/0.7
    with mpmath.workdps(50):
        nu1 = mpmath.mpf(1) / mpmath.mpf("0.7")
        decay = mpmath.mpf("0.5") + nu1
    ladder = resonances(2, circle_spectrum(0.7, 3), 3.0)
    r10 = next(res for res in ladder if (res.j, res.k) == (1, 0))
    assert abs(r10.nu - float(nu1)) < 1e-14
    assert abs(r10.sigma.imag + float(decay)) < 1e-14


def test_resonances_sorted_and_strict_bound():
    ladder = resonances(2, circle_spectrum(1.0, 4), 1.5)
    assert [res.decay for res in ladder] == [0.5]  # 1.5 itself is outside the open strip
    ladder = resonances(2, circle_spectrum(0.7, 6), 5.0)
    decays = [res.decay for res in ladder]
    assert decays == sorted(decays)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0, 2.5])
@pytest.mark.parametrize("depth", [0.4, 1.0, 2.75, 6.0])
def test_resonance_count_matches_brute_force(n, alpha, depth):
    spec = circle_spectrum(alpha, int(depth * alpha) + 3)
    ladder = resonances(n, spec, depth)
    pairs = [(res.j, res.k) for res in ladder]
    assert len(pairs) == len(set(pairs))
    assert set(pairs) == _brute_force_pairs(n, spec, depth)


@settings(max_examples=50)
@given(
    st.integers(min_value=2, max_value=6),
    st.lists(st.floats(min_value=0.01, max_value=40.0), min_size=0, max_size=6, unique=True),
    st.floats(min_value=0.1, max_value=5.0),
    st.floats(min_value=0.0, max_value=4.0),
)
def test_resonances_prefix_stable(n, mus, depth, extra):
    spec = explicit_spectrum([[0.0, 1]] + [[m, 1] for m in sorted(mus)])
    shallow = resonances(n, spec, depth)
    deep = resonances(n, spec, depth + extra)
    assert deep.items[: len(shallow)] == shallow.items


def test_multiplicity_representation_invariance():
    merged = explicit_spectrum(merge_duplicates([[0, 1], [2.0, 2], [5.0, 1]]))
    split = explicit_spectrum(merge_duplicates([[0, 1], [2.0, 1], [2.0, 1], [5.0, 1]]))
    a = exponent_ladder(resonances(3, merged, 5.0))
    b = exponent_ladder(resonances(3, split, 5.0))
    assert [(e.decay, e.multiplicity) for e in a] == [(e.decay, e.multiplicity) for e in b]


def test_is_half_integer():
    assert is_half_integer(0.5) and is_half_integer(3.5)
    assert not is_half_integer(1.0) and not is_half_integer(0.5 + 1e-9)


# -- exponent_ladder --------------------------------------------------------

def test_exponent_ladder_collision_flags_log():
    ex = exponent_ladder(resonances(2, circle_spectrum(1.0, 3), 2.0))
    assert [tuple(e) for e in ex] == [(0.5, 1, False), (1.5, 3, True)]


def test_exponent_ladder_alpha_07():
    ex = exponent_ladder(resonances(2, circle_spectrum(0.7, 3), 2.0))
    assert len(ex) == 3
    assert tuple(ex[0]) == (0.5, 1, False)
    assert tuple(ex[1]) == (1.5, 1, False)
    assert ex[2].decay == pytest.approx(0.5 + 1 / 0.7, abs=1e-14)
    assert ex[2].multiplicity == 2 and not ex[2].log_flag


def test_exponent_ladder_generic_alpha_has_no_logs():
    ex = exponent_ladder(resonances(2, circle_spectrum(1 / math.sqrt(2), 8), 6.0))
    assert not any(e.log_flag for e in ex)


def test_exponent_ladder_excluded_sets_log():
    ex = exponent_ladder(resonances(3, explicit_spectrum([[0.0, 1]]), 2.0))
    assert ex[0].log_flag


def test_exponent_ladder_empty_rejected():
    with pytest.raises(DomainError):
        exponent_ladder(resonances(2, circle_spectrum(1.0, 1), 0.4))


def test_mode_ladder_restricts():
    ladder = resonances(2, circle_spectrum(0.7, 4), 4.0)
    sub = mode_ladder(ladder, 1)
    assert {res.j for res in sub} == {1}
    assert [res.k for res in sub] == [0, 1, 2]


def test_ladder_csv(tmp_path):
    ladder = resonances(2, circle_spectrum(1.0, 3), 3.0)
    path = ladder_to_csv(ladder, tmp_path / "ladder.csv")
    lines = path.read_text().splitlines()
    assert tuple(lines[0].split(",")) == LADDER_CSV_HEADER
    assert "0,0,0,-0.5,1,false" in lines
    empty = ladder_to_csv(resonances(2, circle_spectrum(1.0, 3), 0.4), tmp_path / "empty.csv")
    assert empty.read_text().splitlines() == [",".join(LADDER_CSV_HEADER)]


def test_link_spectrum_is_frozen():
    spec = LinkSpectrum(((0.0, 1),))
    with pytest.raises(AttributeError):
        spec.entries = ()
