# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled walk kernel.  Output is bit-identical to ``_walk_py.sample_walks``."""
from cython.parallel import prange
from libc.stdint cimport int32_t, int64_t, uint64_t

import numpy as np

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef void _walk_doc(const int64_t[::1] indptr, const int32_t[::1] indices,
                    int64_t start, uint64_t key, const int64_t[::1] walk_lengths,
                    const int64_t[::1] offsets, int64_t s,
                    int32_t[::1] out, int32_t[::1] realized) noexcept nogil:
    cdef Py_ssize_t w, step
    cdef int64_t cur, lo
    cdef uint64_t deg, x, ctr
    for w in range(walk_lengths.shape[0]):
        cur = start
        for step in range(walk_lengths[w]):
            lo = indptr[cur]
            deg = <uint64_t>(indptr[cur + 1] - lo)
            if deg == 0:
                break
            ctr = <uint64_t>(w * s + step + 1)
            x = mix64(key + ctr * GAMMA)
            cur = indices[lo + <int64_t>(((x >> 32) * deg) >> 32)]
            out[offsets[w] + step] = <int32_t>cur
            realized[w] += 1


def sample_walks(indptr, indices, starts, keys, walk_lengths, s, workers=1):
    cdef const int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef const int64_t[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const uint64_t[::1] ky = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const int64_t[::1] wl = np.ascontiguousarray(walk_lengths, dtype=np.int64)
    cdef Py_ssize_t n_docs = st.shape[0], n_walks = wl.shape[0], d
    cdef int64_t stride = s
    cdef int nthreads = max(1, int(workers))
    offsets_arr = np.zeros(n_walks + 1, dtype=np.int64)
    np.cumsum(walk_lengths, out=offsets_arr[1:])
    cdef const int64_t[::1] off = offsets_arr
    out_arr = np.full((n_docs, offsets_arr[-1]), -1, dtype=np.int32)
    realized_arr = np.zeros((n_docs, n_walks), dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef int32_t[:, ::1] realized = realized_arr
    if n_docs == 0 or n_walks == 0 or ix.shape[0] == 0:
        return out_arr, realized_arr
    for d in prange(n_docs, nogil=True, num_threads=nthreads, schedule="static"):
        _walk_doc(ip, ix, st[d], ky[d], wl, off, stride, out[d], realized[d])
    return out_arr, realized_arr
