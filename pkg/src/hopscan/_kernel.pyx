# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled depth-first search kernel.

Contract-identical to `hopscan._kernel_py.search` (see its docstring for
the output encoding). The hot loop runs without the GIL so callers can get
real parallelism by partitioning seeds across threads. The value-band
comparison is done in 128-bit integers: micro-USD values can reach 1e18,
so the tolerance multiply would overflow int64.
"""

from libc.stdint cimport int8_t, int32_t, int64_t
from libc.string cimport memcpy
from libcpp.vector cimport vector

import numpy as np


cdef extern from *:
    ctypedef long long int128 "__int128"


cdef int64_t USD_SCALE = 1000000


cdef inline Py_ssize_t _bisect_right(const int64_t* arr, Py_ssize_t lo,
                                     Py_ssize_t hi, int64_t x) noexcept nogil:
    cdef Py_ssize_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def search(ts, vin, vout, tok_in, tok_out, kind, eff, qslot,
           boff, bmem, bmem_ts, soff, smem, smem_ts,
           seeds, window, tol_micro, min_len, max_len):
    cdef const int64_t[::1] ts_v = np.ascontiguousarray(ts, dtype=np.int64)
    cdef const int64_t[::1] vin_v = np.ascontiguousarray(vin, dtype=np.int64)
    cdef const int64_t[::1] vout_v = np.ascontiguousarray(vout, dtype=np.int64)
    cdef const int32_t[::1] tin_v = np.ascontiguousarray(tok_in, dtype=np.int32)
    cdef const int32_t[::1] tout_v = np.ascontiguousarray(tok_out, dtype=np.int32)
    cdef const int8_t[::1] eff_v = np.ascontiguousarray(eff, dtype=np.int8)
    cdef const int64_t[::1] qslot_v = np.ascontiguousarray(qslot, dtype=np.int64)
    cdef const int64_t[::1] boff_v = np.ascontiguousarray(boff, dtype=np.int64)
    cdef const int64_t[::1] bmem_v = np.ascontiguousarray(bmem, dtype=np.int64)
    cdef const int64_t[::1] bmem_ts_v = np.ascontiguousarray(bmem_ts, dtype=np.int64)
    cdef const int64_t[::1] soff_v = np.ascontiguousarray(soff, dtype=np.int64)
    cdef const int64_t[::1] smem_v = np.ascontiguousarray(smem, dtype=np.int64)
    cdef const int64_t[::1] smem_ts_v = np.ascontiguousarray(smem_ts, dtype=np.int64)
    cdef const int64_t[::1] seeds_v = np.ascontiguousarray(seeds, dtype=np.int64)

    cdef int64_t window_c = window
    cdef int64_t tol_c = tol_micro
    cdef Py_ssize_t min_len_c = min_len
    cdef Py_ssize_t max_len_c = max_len
    cdef Py_ssize_t nseeds = seeds_v.shape[0]

    cdef vector[int64_t] out
    cdef vector[int64_t] st_id
    cdef vector[int8_t] st_eff
    cdef vector[Py_ssize_t] st_pos
    cdef vector[Py_ssize_t] st_end
    st_id.resize(max_len_c)
    st_eff.resize(max_len_c)
    st_pos.resize(max_len_c)
    st_end.resize(max_len_c)

    cdef Py_ssize_t si, depth, nd, length, slot, lo, hi, p
    cdef int64_t s, c, last, t, vi, vo
    cdef int8_t ne
    cdef const int64_t* mem
    cdef const int64_t* mem_ts
    cdef const int64_t* off

    with nogil:
        for si in range(nseeds):
            s = seeds_v[si]
            st_id[0] = s
            st_eff[0] = eff_v[s]
            # successor window of the seed (bridge family)
            slot = qslot_v[s]
            if slot < 0:
                st_pos[0] = 0
                st_end[0] = 0
            else:
                lo = boff_v[slot]
                hi = boff_v[slot + 1]
                t = ts_v[s]
                st_pos[0] = _bisect_right(&bmem_ts_v[0], lo, hi, t)
                st_end[0] = _bisect_right(&bmem_ts_v[0], lo, hi, t + window_c)
            depth = 0
            while depth >= 0:
                if st_pos[depth] >= st_end[depth]:
                    depth -= 1
                    continue
                if depth % 2 == 0:
                    c = bmem_v[st_pos[depth]]
                else:
                    c = smem_v[st_pos[depth]]
                st_pos[depth] += 1
                last = st_id[depth]
                if tin_v[c] != tout_v[last]:
                    continue
                vo = vout_v[last]
                vi = vin_v[c]
                if vi > vo or (<int128>tol_c) * vo > (<int128>USD_SCALE) * vi:
                    continue
                nd = depth + 1
                length = nd + 1
                st_id[nd] = c
                ne = st_eff[depth] | eff_v[c]
                st_eff[nd] = ne
                if nd % 2 == 0 and length >= min_len_c and ne:
                    out.push_back(length)
                    for p in range(length):
                        out.push_back(st_id[p])
                if length < max_len_c:
                    slot = qslot_v[c]
                    if slot < 0:
                        st_pos[nd] = 0
                        st_end[nd] = 0
                    else:
                        t = ts_v[c]
                        if nd % 2 == 0:
                            lo = boff_v[slot]
                            hi = boff_v[slot + 1]
                            st_pos[nd] = _bisect_right(&bmem_ts_v[0], lo, hi, t)
                            st_end[nd] = _bisect_right(&bmem_ts_v[0], lo, hi, t + window_c)
                        else:
                            lo = soff_v[slot]
                            hi = soff_v[slot + 1]
                            st_pos[nd] = _bisect_right(&smem_ts_v[0], lo, hi, t)
                            st_end[nd] = _bisect_right(&smem_ts_v[0], lo, hi, t + window_c)
                    depth = nd

    res = np.empty(out.size(), dtype=np.int64)
    cdef int64_t[::1] res_v = res
    if out.size() > 0:
        memcpy(&res_v[0], out.data(), out.size() * sizeof(int64_t))
    return res
