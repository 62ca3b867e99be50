# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled MinHash kernel; must agree bit-for-bit with _minhash_py."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport uint32_t, uint64_t

cnp.import_array()

cdef uint64_t MERSENNE = (1 << 31) - 1


cdef inline uint64_t _gram_hash(str text, Py_ssize_t start, Py_ssize_t length):
    cdef uint32_t h = 2166136261u
    cdef Py_ssize_t i
    for i in range(start, start + length):
        h ^= <uint32_t>ord(text[i])
        h *= 16777619u
    return (<uint64_t>h) % MERSENNE


def signatures(texts, int ngram, a, b):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] av = np.ascontiguousarray(a, dtype=np.uint64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] bv = np.ascontiguousarray(b, dtype=np.uint64)
    cdef Py_ssize_t k = av.shape[0], n = len(texts)
    cdef cnp.ndarray[cnp.uint64_t, ndim=2] out = np.empty((n, k), dtype=np.uint64)
    cdef Py_ssize_t row, g, j, n_grams, width
    cdef uint64_t x, v
    cdef str text
    cdef uint64_t[::1] xs
    for row in range(n):
        text = texts[row]
        if len(text) < ngram:
            n_grams = 1
            width = len(text)
        else:
            n_grams = len(text) - ngram + 1
            width = ngram
        xs = np.empty(n_grams, dtype=np.uint64)
        for g in range(n_grams):
            xs[g] = _gram_hash(text, g, width)
        for j in range(k):
            v = MERSENNE
            for g in range(n_grams):
                x = (av[j] * xs[g] + bv[j]) % MERSENNE
                if x < v:
                    v = x
            out[row, j] = v
    return out
