# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled kernel backend.

Mirrors `_kernels_py` operation for operation: float32 accumulation in a
fixed order (input channel, kernel row, kernel column; feature index for
linear) over a pre-padded ifmap. Compiled with fp-contract disabled so
results stay bit-identical to the numpy backend.
"""
import numpy as np

NAME = "cython"


def conv2d_f32(const float[:, :, ::1] padded,
               const float[:, :, :, ::1] weights,
               const float[::1] bias,
               int stride, int out_h, int out_w):
    cdef Py_ssize_t oc = weights.shape[0]
    cdef Py_ssize_t c = weights.shape[1]
    cdef Py_ssize_t kh = weights.shape[2]
    cdef Py_ssize_t kw = weights.shape[3]
    out_arr = np.empty((oc, out_h, out_w), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef Py_ssize_t o, y, x, ci, ky, kx, iy, ix
    cdef float acc
    for o in range(oc):
        for y in range(out_h):
            iy = y * stride
            for x in range(out_w):
                ix = x * stride
                acc = bias[o]
                for ci in range(c):
                    for ky in range(kh):
                        for kx in range(kw):
                            acc = acc + weights[o, ci, ky, kx] * padded[ci, iy + ky, ix + kx]
                out[o, y, x] = acc
    return out_arr


def maxpool2d_f32(const float[:, :, ::1] x, int kernel, int stride):
    cdef Py_ssize_t c = x.shape[0]
    cdef Py_ssize_t h = x.shape[1]
    cdef Py_ssize_t w = x.shape[2]
    cdef Py_ssize_t out_h = (h - kernel) // stride + 1
    cdef Py_ssize_t out_w = (w - kernel) // stride + 1
    out_arr = np.empty((c, out_h, out_w), dtype=np.float32)
    cdef float[:, :, ::1] out = out_arr
    cdef Py_ssize_t ci, y, xx, ky, kx, iy, ix
    cdef float best, v
    for ci in range(c):
        for y in range(out_h):
            iy = y * stride
            for xx in range(out_w):
                ix = xx * stride
                best = x[ci, iy, ix]
                for ky in range(kernel):
                    for kx in range(kernel):
                        v = x[ci, iy + ky, ix + kx]
                        if v > best:
                            best = v
                out[ci, y, xx] = best
    return out_arr


def linear_f32(const float[:, ::1] weights, const float[::1] bias,
               const float[::1] v):
    cdef Py_ssize_t n_out = weights.shape[0]
    cdef Py_ssize_t n_in = weights.shape[1]
    out_arr = np.empty(n_out, dtype=np.float32)
    cdef float[::1] out = out_arr
    cdef Py_ssize_t o, j
    cdef float acc
    for o in range(n_out):
        acc = bias[o]
        for j in range(n_in):
            acc = acc + weights[o, j] * v[j]
        out[o] = acc
    return out_arr
