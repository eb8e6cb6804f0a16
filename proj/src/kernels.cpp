#include "chaoslab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "chaoslab/errors.hpp"
#include "chaoslab/report.hpp"
#include "chaoslab/special.hpp"

namespace chaoslab {

namespace {

constexpr std::size_t kMaxEntries = 10000000;  // dense storage cap

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<const RowMat>;

void check_shape(int q, int n) {
    if (q < 0) throw precondition_error("kernel order q must be >= 0");
    if (n < 1) throw precondition_error("kernel dimension n must be >= 1");
}

void check_same_space(const Kernel& f, const Kernel& g) {
    if (f.q > 0 && g.q > 0 && f.n != g.n)
        throw precondition_error("kernels live on different index sets");
}

}  // namespace

std::size_t kernel_size(int q, int n) {
    check_shape(q, n);
    std::size_t s = 1;
    for (int i = 0; i < q; ++i) {
        if (s > kMaxEntries / static_cast<std::size_t>(n))
            throw capacity_error("kernel storage n^q exceeds 10^7 entries");
        s *= static_cast<std::size_t>(n);
    }
    return s;
}

Kernel make_kernel(int q, int n) {
    Kernel k;
    k.q = q;
    k.n = n;
    k.values.assign(kernel_size(q, n), 0.0);
    k.is_symmetric = true;
    k.vanishes_on_diagonals = true;
    return k;
}

std::size_t flat_index(const Kernel& k, std::span<const int> idx) {
    std::size_t f = 0;
    for (int v : idx) f = f * static_cast<std::size_t>(k.n) + static_cast<std::size_t>(v);
    return f;
}

void unflatten(const Kernel& k, std::size_t flat, std::span<int> idx) {
    for (int a = k.q - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % static_cast<std::size_t>(k.n));
        flat /= static_cast<std::size_t>(k.n);
    }
}

Kernel basis_kernel(int q, int n, std::span<const int> idx) {
    if (static_cast<int>(idx.size()) != q)
        throw precondition_error("basis_kernel: index count must equal q");
    for (int v : idx)
        if (v < 0 || v >= n) throw precondition_error("basis_kernel: index out of range");
    Kernel k = make_kernel(q, n);
    k.values[flat_index(k, idx)] = 1.0;
    recompute_flags(k);
    return k;
}

void recompute_flags(Kernel& k, double tol) {
    double amax = 0.0;
    for (double v : k.values) amax = std::max(amax, std::abs(v));
    if (amax == 0.0) {
        k.is_symmetric = true;
        k.vanishes_on_diagonals = true;
        return;
    }
    const double cut = tol * amax;
    std::vector<int> idx(k.q), sorted_idx(k.q);
    bool symmetric = true;
    bool off_diagonal = true;
    for (std::size_t f = 0; f < k.values.size(); ++f) {
        unflatten(k, f, idx);
        bool has_repeat = false;
        for (int a = 1; a < k.q && !has_repeat; ++a)
            for (int b = 0; b < a; ++b)
                if (idx[a] == idx[b]) {
                    has_repeat = true;
                    break;
                }
        if (has_repeat && std::abs(k.values[f]) > cut) off_diagonal = false;
        if (symmetric && k.q > 1) {
            // Compare against the canonical (sorted) arrangement only; equality
            // along one transposition chain implies full symmetry.
            sorted_idx = idx;
            std::sort(sorted_idx.begin(), sorted_idx.end());
            const double canon = k.values[flat_index(k, sorted_idx)];
            if (std::abs(k.values[f] - canon) > cut) symmetric = false;
        }
        if (!symmetric && !off_diagonal) break;
    }
    k.is_symmetric = symmetric;
    k.vanishes_on_diagonals = off_diagonal;
}

Kernel symmetrize(const Kernel& f) {
    if (f.q > 8) throw precondition_error("symmetrize: q must be <= 8");
    return symmetrize_full(f);
}

Kernel symmetrize_full(const Kernel& f) {
    if (f.q > 30) throw precondition_error("symmetrize_full: q must be <= 30");
    if (f.q <= 1) {
        Kernel out = f;
        recompute_flags(out);
        return out;
    }
    // Two passes.  First accumulate, for every sorted multi-index, the sum
    // of f over all arrangements of that multiset; then divide by the
    // arrangement count.  This is O(n^q q log q) instead of O(n^q q!).
    Kernel out = make_kernel(f.q, f.n);
    std::vector<double> bucket(f.values.size(), 0.0);
    std::vector<int> idx(f.q);
    for (std::size_t pos = 0; pos < f.values.size(); ++pos) {
        unflatten(f, pos, idx);
        std::sort(idx.begin(), idx.end());
        bucket[flat_index(f, idx)] += f.values[pos];
    }
    for (std::size_t pos = 0; pos < f.values.size(); ++pos) {
        unflatten(f, pos, idx);
        std::sort(idx.begin(), idx.end());
        // Number of distinct arrangements = q! / prod multiplicity!.
        double arrangements = factorial(f.q);
        int run = 1;
        for (int a = 1; a <= f.q; ++a) {
            if (a < f.q && idx[a] == idx[a - 1]) {
                ++run;
            } else {
                arrangements /= factorial(run);
                run = 1;
            }
        }
        out.values[pos] = bucket[flat_index(f, idx)] / arrangements;
    }
    recompute_flags(out);
    return out;
}

Kernel tensor(const Kernel& f, const Kernel& g) {
    check_same_space(f, g);
    const int n = f.q > 0 ? f.n : g.n;
    Kernel out;
    out.q = f.q + g.q;
    out.n = n;
    out.values.assign(kernel_size(out.q, n), 0.0);
    const std::size_t gs = g.values.size();
    for (std::size_t i = 0; i < f.values.size(); ++i)
        for (std::size_t j = 0; j < gs; ++j)
            out.values[i * gs + j] = f.values[i] * g.values[j];
    recompute_flags(out);
    return out;
}

Kernel contract(const Kernel& f, const Kernel& g, int r) {
    check_same_space(f, g);
    if (r < 0 || r > std::min(f.q, g.q))
        throw precondition_error("contract: need 0 <= r <= min(p, q)");
    if (r == 0) return tensor(f, g);
    const int n = f.n;
    const std::size_t nr = kernel_size(r, n);
    const std::size_t fr = f.values.size() / nr;   // n^(p-r)
    const std::size_t gr = g.values.size() / nr;   // n^(q-r)
    Kernel out;
    out.q = f.q + g.q - 2 * r;
    out.n = n;
    out.values.assign(kernel_size(out.q, n), 0.0);
    // Row-major with trailing arguments fastest: f is an (n^(p-r) x n^r)
    // matrix over (leading, contracted) blocks, likewise g, and the
    // contraction is F G^T.
    MapRow F(f.values.data(), static_cast<Eigen::Index>(fr), static_cast<Eigen::Index>(nr));
    MapRow G(g.values.data(), static_cast<Eigen::Index>(gr), static_cast<Eigen::Index>(nr));
    Eigen::Map<RowMat> O(out.values.data(), static_cast<Eigen::Index>(fr),
                         static_cast<Eigen::Index>(gr));
    O.noalias() = F * G.transpose();
    recompute_flags(out);
    return out;
}

Kernel free_contract(const Kernel& f, const Kernel& g, int r) {
    check_same_space(f, g);
    if (r < 0 || r > std::min(f.q, g.q))
        throw precondition_error("free_contract: need 0 <= r <= min(p, q)");
    if (r == 0) return tensor(f, g);
    const int n = f.n;
    // Reverse the first r arguments of g, then the pairing becomes an
    // ordinary matrix product with the contracted block leading in g.
    Kernel grev = g;
    if (r > 1) {
        std::vector<int> idx(g.q);
        for (std::size_t pos = 0; pos < g.values.size(); ++pos) {
            unflatten(g, pos, idx);
            std::reverse(idx.begin(), idx.begin() + r);
            grev.values[flat_index(g, idx)] = g.values[pos];
        }
    }
    const std::size_t nr = kernel_size(r, n);
    const std::size_t fr = f.values.size() / nr;
    const std::size_t gr = g.values.size() / nr;
    Kernel out;
    out.q = f.q + g.q - 2 * r;
    out.n = n;
    out.values.assign(kernel_size(out.q, n), 0.0);
    MapRow F(f.values.data(), static_cast<Eigen::Index>(fr), static_cast<Eigen::Index>(nr));
    // grev in row-major with its first r arguments slowest is an
    // (n^r x n^(q-r)) matrix.
    MapRow G(grev.values.data(), static_cast<Eigen::Index>(nr),
             static_cast<Eigen::Index>(gr));
    Eigen::Map<RowMat> O(out.values.data(), static_cast<Eigen::Index>(fr),
                         static_cast<Eigen::Index>(gr));
    O.noalias() = F * G;
    recompute_flags(out);
    return out;
}

Kernel mirror_adjoint(const Kernel& f) {
    Kernel out = f;
    if (f.q > 1) {
        std::vector<int> idx(f.q);
        for (std::size_t pos = 0; pos < f.values.size(); ++pos) {
            unflatten(f, pos, idx);
            std::reverse(idx.begin(), idx.end());
            out.values[flat_index(f, idx)] = f.values[pos];
        }
    }
    recompute_flags(out);
    return out;
}

double inner(const Kernel& f, const Kernel& g) {
    if (f.q != g.q || (f.q > 0 && f.n != g.n))
        throw precondition_error("inner: kernel shapes must match");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * g.values[i];
    return s;
}

double l2_norm_sq(const Kernel& f) { return inner(f, f); }

Kernel scaled(const Kernel& f, double c) {
    Kernel out = f;
    for (double& v : out.values) v *= c;
    recompute_flags(out);
    return out;
}

Kernel add(const Kernel& f, const Kernel& g) {
    if (f.q != g.q || f.n != g.n)
        throw precondition_error("add: kernel shapes must match");
    Kernel out = f;
    for (std::size_t i = 0; i < g.values.size(); ++i) out.values[i] += g.values[i];
    recompute_flags(out);
    return out;
}

void save_kernel_csv(const Kernel& k, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    for (int a = 1; a <= k.q; ++a) out << 'i' << a << ',';
    out << "value\n";
    std::vector<int> idx(k.q);
    for (std::size_t pos = 0; pos < k.values.size(); ++pos) {
        unflatten(k, pos, idx);
        for (int v : idx) out << (v + 1) << ',';
        out << format_double(k.values[pos]) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

Kernel load_kernel_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) throw io_error("empty kernel file: " + path);
    int q = 0;
    {
        std::stringstream hs(header);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(hs, col, ',')) cols.push_back(col);
        if (cols.empty() || cols.back() != "value")
            throw io_error("kernel CSV must end with a 'value' column: " + path);
        q = static_cast<int>(cols.size()) - 1;
        for (int a = 0; a < q; ++a)
            if (cols[a] != "i" + std::to_string(a + 1))
                throw io_error("kernel CSV has unexpected index column '" + cols[a] +
                               "': " + path);
    }
    std::vector<std::vector<int>> rows_idx;
    std::vector<double> rows_val;
    std::string line;
    int n = 1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::vector<int> idx(q);
        for (int a = 0; a < q; ++a) {
            if (!std::getline(ls, cell, ','))
                throw io_error("short row at line " + std::to_string(lineno) + ": " + path);
            try {
                idx[a] = std::stoi(cell);
            } catch (const std::exception&) {
                throw io_error("bad index at line " + std::to_string(lineno) + ": " + path);
            }
            if (idx[a] < 1)
                throw io_error("indices are 1-based; bad value at line " +
                               std::to_string(lineno) + ": " + path);
            n = std::max(n, idx[a]);
            --idx[a];
        }
        if (!std::getline(ls, cell, ','))
            throw io_error("missing value at line " + std::to_string(lineno) + ": " + path);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(cell, &used);
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                ++used;
            if (used != cell.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw io_error("bad value at line " + std::to_string(lineno) + ": " + path);
        }
        rows_idx.push_back(std::move(idx));
        rows_val.push_back(v);
    }
    Kernel k = make_kernel(q, n);
    for (std::size_t r = 0; r < rows_idx.size(); ++r)
        k.values[flat_index(k, rows_idx[r])] = rows_val[r];
    recompute_flags(k);
    return k;
}

namespace {
constexpr char kMagic[4] = {'C', 'L', 'K', 'N'};
}

void save_kernel_binary(const Kernel& k, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(kMagic, 4);
    const std::uint32_t version = 1, q = static_cast<std::uint32_t>(k.q),
                        n = static_cast<std::uint32_t>(k.n);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&q), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    const std::uint8_t sym = k.is_symmetric ? 1 : 0, offd = k.vanishes_on_diagonals ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&sym), 1);
    out.write(reinterpret_cast<const char*>(&offd), 1);
    out.write(reinterpret_cast<const char*>(k.values.data()),
              static_cast<std::streamsize>(k.values.size() * sizeof(double)));
    if (!out) throw io_error("write failed: " + path);
}

Kernel load_kernel_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("not a kernel binary (bad magic): " + path);
    std::uint32_t version = 0, q = 0, n = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&q), 4);
    in.read(reinterpret_cast<char*>(&n), 4);
    if (!in || version != 1)
        throw io_error("unsupported kernel binary version: " + path);
    std::uint8_t flags[2];
    in.read(reinterpret_cast<char*>(flags), 2);
    if (q > 64 || n == 0) throw io_error("corrupt kernel header: " + path);
    Kernel k = make_kernel(static_cast<int>(q), static_cast<int>(n));
    in.read(reinterpret_cast<char*>(k.values.data()),
            static_cast<std::streamsize>(k.values.size() * sizeof(double)));
    if (!in) throw io_error("truncated kernel binary: " + path);
    char extra;
    if (in.read(&extra, 1)) throw io_error("trailing bytes in kernel binary: " + path);
    recompute_flags(k);
    return k;
}

Kernel load_kernel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return load_kernel_binary(path);
    return load_kernel_csv(path);
}

}  // namespace chaoslab
