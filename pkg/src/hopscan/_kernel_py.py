"""Pure-Python depth-first search kernel.

Reference implementation of the multihop search. The compiled extension
(`hopscan._kernel`) implements the same contract; dispatch lives in
`hopscan.kernel`. Arithmetic uses Python ints, so the value-band check is
exact at any magnitude.

Output encoding (shared by both kernels): a flat int64 sequence of
``[length, id_0, ..., id_{length-1}, length, ...]`` records, one per path
that starts and ends with a swap, has odd length in [min_len, max_len],
and contains at least one token-changing swap. Candidate extensions are
explored in bucket (time) order, so the encoding is deterministic for a
given seed order.
"""

from __future__ import annotations

from bisect import bisect_right

USD_SCALE = 1_000_000


def search(
    ts, vin, vout, tok_in, tok_out, kind, eff,
    qslot,
    boff, bmem, bmem_ts,
    soff, smem, smem_ts,
    seeds,
    window: int, tol_micro: int, min_len: int, max_len: int,
):
    # numpy scalar indexing is slow and silently wraps on overflow; plain
    # lists of Python ints are both faster here and exact
    ts_l = ts.tolist()
    vin_l = vin.tolist()
    vout_l = vout.tolist()
    tin_l = tok_in.tolist()
    tout_l = tok_out.tolist()
    eff_l = eff.tolist()
    qslot_l = qslot.tolist()
    boff_l = boff.tolist()
    bmem_l = bmem.tolist()
    bmem_ts_l = bmem_ts.tolist()
    soff_l = soff.tolist()
    smem_l = smem.tolist()
    smem_ts_l = smem_ts.tolist()

    out: list[int] = []
    st_id = [0] * max_len
    st_eff = [False] * max_len
    st_pos = [0] * max_len
    st_end = [0] * max_len

    def window_range(rec: int, swap_side: bool) -> tuple[int, int]:
        """Member-array span holding rec's successors in (t, t + window]."""
        slot = qslot_l[rec]
        if slot < 0:
            return 0, 0
        if swap_side:
            off, mem_ts = boff_l, bmem_ts_l
        else:
            off, mem_ts = soff_l, smem_ts_l
        lo, hi = off[slot], off[slot + 1]
        t = ts_l[rec]
        a = bisect_right(mem_ts, t, lo, hi)
        b = bisect_right(mem_ts, t + window, lo, hi)
        return a, b

    for s in seeds.tolist():
        st_id[0] = s
        st_eff[0] = bool(eff_l[s])
        st_pos[0], st_end[0] = window_range(s, True)
        depth = 0
        while depth >= 0:
            if st_pos[depth] >= st_end[depth]:
                depth -= 1
                continue
            members = bmem_l if depth % 2 == 0 else smem_l
            c = members[st_pos[depth]]
            st_pos[depth] += 1
            last = st_id[depth]
            if tin_l[c] != tout_l[last]:
                continue
            vo = vout_l[last]
            vi = vin_l[c]
            if vi > vo or tol_micro * vo > USD_SCALE * vi:
                continue
            nd = depth + 1
            length = nd + 1
            st_id[nd] = c
            ne = st_eff[depth] or bool(eff_l[c])
            st_eff[nd] = ne
            if nd % 2 == 0 and length >= min_len and ne:
                out.append(length)
                out.extend(st_id[:length])
            if length < max_len:
                st_pos[nd], st_end[nd] = window_range(c, nd % 2 == 0)
                depth = nd
    return out
