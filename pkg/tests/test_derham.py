import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdivforms import meshgen
from subdivforms.derham import (betti, build_D, check_commutation, dd_residual, matrix_rank,
                                restrict_zero_trace, restricted_D)
from subdivforms.errors import BoundaryLeak, LevelOrder, TooLarge
from subdivforms.subdivision import accumulate, build_hierarchy


def test_dd_single_triangle():
    t = meshgen.single_triangle()
    P = (build_D(t, 1) @ build_D(t, 0)).toarray()
    assert P.shape == (1, 3) and not P.any()
    assert dd_residual(t) == 0


def test_ranks_two_triangle_square():
    sq = meshgen.two_triangle_square()
    assert build_D(sq, 0).shape == (5, 4)
    assert build_D(sq, 1).shape == (2, 5)
    assert matrix_rank(build_D(sq, 0)) == 3
    assert matrix_rank(build_D(sq, 1)) == 2


def test_D0_rows(disk):
    D0 = build_D(disk, 0)
    assert np.all(np.asarray(D0.sum(axis=1)).ravel() == 0)
    assert set(np.unique(D0.data)) == {-1, 1}


def test_whitney_commutes(wh_square):
    for k in (0, 1):
        for l1 in range(4):
            for l2 in range(l1, 4):
                res, mode = check_commutation(wh_square, k, l1, l2)
                assert res == 0 and mode == "exact"


def test_loopwang_irregular(disk):
    h = build_hierarchy(disk, 2)
    for k in (0, 1):
        res, _ = check_commutation(h, k, 0, 2)
        assert res <= 1e-13


def test_loopwang_regular_exact(lw_square):
    res, mode = check_commutation(lw_square, 1, 0, 3)
    assert (res, mode) == (0.0, "exact")


def test_corrupted_weight_detected(disk):
    h = build_hierarchy(disk, 2)
    S = h.S[1][0].copy()
    S.data[len(S.data) // 2] += 1e-3
    h.S[1][0] = S
    h._cache.clear()
    res, _ = check_commutation(h, 0, 0, 2)
    assert res >= 1e-4


def test_level_order(lw_square):
    with pytest.raises(LevelOrder):
        check_commutation(lw_square, 0, 2, 1)


def test_betti_disk(disk):
    assert betti(disk).betti == (1, 0, 0)
    assert betti(disk, relative=True).betti == (0, 0, 1)
    sq = meshgen.structured_square(3)
    assert betti(sq).betti == (1, 0, 0)
    assert betti(sq, relative=True).betti == (0, 0, 1)


def test_betti_annulus(annulus):
    assert annulus.n_faces == 16
    rep = betti(annulus)
    assert rep.betti == (1, 1, 0)
    assert rep.euler == annulus.euler_characteristic == 0
    assert betti(annulus, relative=True).betti == (0, 1, 1)


def test_betti_too_large():
    with pytest.raises(TooLarge):
        betti(meshgen.structured_square(4), max_size=10)


def test_restrict_zero_trace(lw_square):
    h = lw_square
    A2 = accumulate(h, 2, 0, 2)
    assert restrict_zero_trace(A2, h).shape == A2.shape
    A1 = accumulate(h, 1, 0, 2)
    R = restrict_zero_trace(A1, h)
    assert R.shape[1] == (~h.meshes[0].boundary_edges).sum()


def test_restrict_two_triangle_square():
    sq = meshgen.two_triangle_square()
    h = build_hierarchy(sq, 0)
    assert restrict_zero_trace(accumulate(h, 1, 0, 0), h).shape == (5, 1)


def test_boundary_leak_detected():
    h = build_hierarchy(meshgen.structured_square(2), 1)
    S = h.S[1][0].tolil()
    fine, coarse = h.meshes[1], h.meshes[0]
    S[int(np.flatnonzero(fine.boundary_edges)[0]), int(np.flatnonzero(~coarse.boundary_edges)[0])] = 0.25
    h.S[1][0] = S.tocsr()
    h._cache.clear()
    with pytest.raises(BoundaryLeak):
        restrict_zero_trace(accumulate(h, 1, 0, 1), h)


def test_restricted_complex(disk):
    D0, D1 = restricted_D(disk, 0), restricted_D(disk, 1)
    assert abs(D1 @ D0).max() == 0


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 5), m=st.integers(1, 5), alt=st.booleans())
def test_betti_property(n, m, alt):
    mesh = meshgen.structured_square(n, m, alternating=alt)
    assert betti(mesh).betti == (1, 0, 0)
    assert betti(mesh, relative=True).betti == (0, 0, 1)
