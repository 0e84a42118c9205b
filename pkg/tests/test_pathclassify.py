import itertools

import pytest
from hypothesis import given, strategies as st

from cspbelow.errors import InputError
from cspbelow.pathclassify import (NlWitness, build_leq_gadget, check_witness, classify_path_shape,
                                   common_path, is_rigid_path, nl_witness_search, wave_obstructions,
                                   wave_word)
from cspbelow.pathscape import OrientedPath
from cspbelow.structures import is_core, maps_to

from oracles import brute_homomorphisms, brute_maps_to, walk_maps_to

NL_CORE = "FFFFBBFBBFFFF"
NL_WITNESS = NlWitness((1, 4, 9, 12), OrientedPath("FFF"), 3, {})


def all_words(max_len):
    return ["".join(w) for n in range(1, max_len + 1) for w in itertools.product("FB", repeat=n)]


def test_directed_and_wave_words():
    assert classify_path_shape("FFF").kind == "directed"
    shape = classify_path_shape("FFBFBFF")
    assert shape.kind == "wave" and shape.params["r"] == 2 and shape.params["ell"] == 1
    assert wave_word(2, 1) == "FFBFBFF"
    assert classify_path_shape("FFBFF").params == {"r": 1, "ell": 1, "oriented": "FFBFF"}


def test_wave_read_from_the_other_end():
    mirrored = "FFBFBFF"[::-1].translate(str.maketrans("FB", "BF"))
    assert classify_path_shape(mirrored).kind == "wave"


def test_staircase():
    word = "FFBFFFBFF"  # troughs 1 < 3, peaks 2 < 4
    shape = classify_path_shape(word)
    assert shape.kind == "staircase" and shape.params["waves"] == 2
    assert "".join(seg[1] for seg in shape.segments) == word


def test_non_minimal_is_other():
    assert classify_path_shape("FFBF").kind == "other"


@given(st.integers(1, 3), st.integers(1, 3))
def test_wave_words_classify_as_their_parameters(r, ell):
    shape = classify_path_shape(wave_word(r, ell))
    assert shape.kind == "wave" and (shape.params["r"], shape.params["ell"]) == (r, ell)


def test_decompositions_resynthesize_the_word():
    for w in all_words(10):
        shape = classify_path_shape(w)
        if shape.kind in ("wave", "staircase"):
            assert "".join(seg[1] for seg in shape.segments) == shape.params["oriented"]


def test_common_path():
    assert common_path("FFBFF", "FFBFF").word == "FFBFF"
    q = common_path("FFF", "FFBFF")
    assert q.word == "FFBFF"
    for target in ("FFF", "FFBFF"):
        assert brute_maps_to(q.structure(), OrientedPath(target).structure())
    assert common_path("FFF", "FFBFF", max_len=1) is None
    with pytest.raises(InputError):
        common_path("FF", "FFF")


def test_nl_witness_on_padded_core():
    assert is_core(OrientedPath(NL_CORE).structure(), max_size=20)
    assert not is_core(OrientedPath("FFFBBFBBFFF").structure(), max_size=20)
    assert check_witness(NL_CORE, NL_WITNESS)
    parts = NL_WITNESS.parts(OrientedPath(NL_CORE))
    assert parts == ("FFF", "BBFBB", "FFF")  # BBFBB is FFBFF read downwards
    q = NL_WITNESS.q.structure()
    assert brute_maps_to(q, OrientedPath(parts[0]).structure())
    assert not brute_maps_to(q, OrientedPath(parts[1]).structure())
    found = nl_witness_search(NL_CORE)
    assert found is not None and check_witness(NL_CORE, found)


def test_no_witness_for_short_or_wave_paths():
    assert nl_witness_search("FF") is None
    assert nl_witness_search(wave_word(1, 1)) is None
    with pytest.raises(InputError):
        nl_witness_search("FB")


def test_leq_gadget():
    g = build_leq_gadget(NL_CORE, NL_WITNESS)
    assert g.verified and g.structure.size == 27
    assert g.projection == {("0", "0"), ("0", "1"), ("1", "1")}
    assert ("1", "0") not in g.projection


def test_wave_obstructions_are_sound():
    wave = "FFFBBFFF"
    obs = wave_obstructions(wave, 10)
    assert len(obs.emitted) == 10 and {o.form for o in obs.emitted} == {1}
    assert obs.taller_than == 4
    target = OrientedPath(wave).structure()
    for o in obs.emitted:
        assert not walk_maps_to(o.path.word, target)
        assert o.path.height == 4


def test_short_directed_paths_are_never_obstructions():
    obs = wave_obstructions("FFFBBFFF", 10)
    for n in range(1, 4):
        assert not obs.covers("F" * n)
        assert maps_to(OrientedPath("F" * n).structure(), OrientedPath("FFFBBFFF").structure())


def test_obstructions_need_a_wave():
    with pytest.raises(InputError):
        wave_obstructions("FFF")


def test_rigidity():
    assert is_rigid_path("F")
    assert is_rigid_path("FFBFF")
    with pytest.raises(InputError):
        is_rigid_path("FB")
    # brute-force automorphism count agrees
    s = OrientedPath("FFBFF").structure()
    autos = [h for h in brute_homomorphisms(s, s) if len(set(h.values())) == s.size]
    assert len(autos) == 1
