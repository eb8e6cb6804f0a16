#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace chaoslab {

// Dense real kernel f(t_1, ..., t_q) with each argument ranging over
// {0, ..., n-1}.  Values are stored row-major with the LAST argument
// fastest-varying; the scalar case q = 0 holds a single value.  Flag fields
// are derived from the values (see recompute_flags) and are refreshed by
// every loader, never trusted from a file.
struct Kernel {
    int q = 0;
    int n = 1;
    std::vector<double> values;
    bool is_symmetric = false;
    bool vanishes_on_diagonals = false;
};

// Checked n^q; throws capacity_error above 10^7 entries.
std::size_t kernel_size(int q, int n);

// Zero kernel of the given shape.
Kernel make_kernel(int q, int n);

// Row-major position of a 0-based multi-index (size q).
std::size_t flat_index(const Kernel& k, std::span<const int> idx);
// Inverse of flat_index.
void unflatten(const Kernel& k, std::size_t flat, std::span<int> idx);

// Rank-one basis kernel e_{i_1} x ... x e_{i_q} (0-based indices).
Kernel basis_kernel(int q, int n, std::span<const int> idx);

// Refreshes is_symmetric / vanishes_on_diagonals with tolerance
// tol * max|f| (an all-zero kernel gets both flags set).
void recompute_flags(Kernel& k, double tol = 1e-12);

// Canonical symmetrization (1/q!) sum over argument permutations; q <= 8.
Kernel symmetrize(const Kernel& f);

// Symmetrization without the public order cap, for internal contraction
// chains whose intermediate kernels exceed order 8; still bounded by the
// dense-storage capacity check.
Kernel symmetrize_full(const Kernel& f);

// Tensor product (f x g)(x, y) = f(x) g(y), order p + q.
Kernel tensor(const Kernel& f, const Kernel& g);

// Contraction pairing the last r arguments of f with the last r of g:
// (f (x)_r g)(x, y) = sum_z f(x, z) g(y, z), order p + q - 2r.
Kernel contract(const Kernel& f, const Kernel& g, int r);

// Half-pairing used by the free product formula: the last r arguments of f
// meet the first r of g in reversed order,
// (f ~_r g)(x, y) = sum_z f(x, z_1..z_r) g(z_r..z_1, y).
Kernel free_contract(const Kernel& f, const Kernel& g, int r);

// Mirror f*(t_1..t_q) = f(t_q..t_1).
Kernel mirror_adjoint(const Kernel& f);

// Full inner product sum f g over all n^q entries (q and n must match).
double inner(const Kernel& f, const Kernel& g);
double l2_norm_sq(const Kernel& f);

Kernel scaled(const Kernel& f, double c);
Kernel add(const Kernel& f, const Kernel& g);

// CSV serialization: header i1,...,iq,value then one row per entry with
// 1-based indices; the writer emits all n^q rows.  The loader accepts any
// subset of rows (missing entries are zero), infers n from the largest
// index, and recomputes the flags.
void save_kernel_csv(const Kernel& k, const std::string& path);
Kernel load_kernel_csv(const std::string& path);

// Binary serialization: magic "CLKN", u32 version (1), u32 q, u32 n,
// u8 symmetric, u8 off-diagonal, then n^q little-endian float64 values.
void save_kernel_binary(const Kernel& k, const std::string& path);
Kernel load_kernel_binary(const std::string& path);

// Sniffs the magic bytes and dispatches to the matching loader.
Kernel load_kernel(const std::string& path);

}  // namespace chaoslab
