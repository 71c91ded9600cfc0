#include "klnmf/data_io.hpp"

#include "klnmf/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace klnmf {

namespace {

// Exact-count sparsity mask with forced row/column coverage. Returns the
// linear (row-major) indices to keep.
std::vector<std::uint8_t> sparsity_mask(Index rows, Index cols,
                                        double sparsity, Rng& rng) {
    const std::uint64_t total = static_cast<std::uint64_t>(rows) * cols;
    const std::uint64_t keep = static_cast<std::uint64_t>(
        std::llround(sparsity * static_cast<double>(total)));
    std::vector<std::uint8_t> mask(total, 0);

    std::vector<std::uint64_t> col_cover(cols, 0);
    std::uint64_t forced = 0;
    for (Index i = 0; i < rows; ++i) {
        const auto c = rng.index(static_cast<std::uint64_t>(cols));
        mask[static_cast<std::uint64_t>(i) * cols + c] = 1;
        ++col_cover[c];
        ++forced;
    }
    for (Index c = 0; c < cols; ++c) {
        if (col_cover[c] > 0) continue;
        const auto i = rng.index(static_cast<std::uint64_t>(rows));
        auto& cell = mask[i * cols + static_cast<std::uint64_t>(c)];
        if (!cell) {
            cell = 1;
            ++forced;
        }
    }
    if (keep < forced)
        throw std::runtime_error(
            "generate_synthetic: sparsity too low to keep every row and "
            "column nonzero");

    std::vector<std::uint64_t> pool;
    pool.reserve(total - forced);
    for (std::uint64_t idx = 0; idx < total; ++idx)
        if (!mask[idx]) pool.push_back(idx);
    // Partial Fisher-Yates over the remaining cells.
    std::uint64_t extra = keep - forced;
    for (std::uint64_t k = 0; k < extra; ++k) {
        const auto j = k + rng.index(pool.size() - k);
        std::swap(pool[k], pool[j]);
        mask[pool[k]] = 1;
    }
    return mask;
}

void apply_mask(Matrix& a, const std::vector<std::uint8_t>& mask) {
    double* d = a.data();  // row-major contiguous
    for (Index i = 0; i < a.size(); ++i)
        if (!mask[static_cast<std::uint64_t>(i)]) d[i] = 0.0;
}

FILE* open_or_throw(const std::string& path, const char* mode) {
    if (path.empty()) throw std::runtime_error("io: empty path");
    FILE* f = std::fopen(path.c_str(), mode);
    if (!f)
        throw std::runtime_error("io: cannot open '" + path + "' for " +
                                 (mode[0] == 'r' ? "reading" : "writing"));
    return f;
}

}  // namespace

std::pair<KLProblem, FactorPair> generate_synthetic(const SynthSpec& spec,
                                                    Regularizer reg) {
    if (spec.m < 1 || spec.n < 1 || spec.r < 1)
        throw std::invalid_argument("generate_synthetic: bad dimensions");
    if (!(spec.sparsity > 0.0 && spec.sparsity <= 1.0))
        throw std::invalid_argument(
            "generate_synthetic: sparsity must lie in (0, 1]");
    if (spec.dirichlet_alpha <= 0.0)
        throw std::invalid_argument(
            "generate_synthetic: dirichlet_alpha must be positive");

    Rng rng(spec.seed);
    FactorPair truth;
    truth.W.resize(spec.m, spec.r);
    for (Index i = 0; i < truth.W.size(); ++i)
        truth.W.data()[i] = rng.uniform01();

    truth.H.resize(spec.r, spec.n);
    for (Index l = 0; l < spec.r; ++l) {
        double sum = 0.0;
        for (Index j = 0; j < spec.n; ++j) {
            const double g = rng.gamma(spec.dirichlet_alpha);
            truth.H(l, j) = g;
            sum += g;
        }
        truth.H.row(l) /= sum;
    }

    if (spec.sparsity < 1.0) {
        apply_mask(truth.W, sparsity_mask(spec.m, spec.r, spec.sparsity, rng));
        apply_mask(truth.H, sparsity_mask(spec.r, spec.n, spec.sparsity, rng));
    }

    Matrix x = truth.W * truth.H;
    if (x.maxCoeff() <= 0.0)
        throw std::runtime_error("generate_synthetic: degenerate instance");
    return {KLProblem(std::move(x), spec.r, reg), std::move(truth)};
}

FactorPair initial_point(const KLProblem& p, std::uint64_t seed,
                         bool scaled) {
    const double x_sum = p.X().sum();
    if (x_sum <= 0.0)
        throw std::runtime_error("initial_point: X has zero total mass");

    Rng rng(seed);
    FactorPair z;
    z.W.resize(p.m(), p.r());
    for (Index i = 0; i < z.W.size(); ++i) z.W.data()[i] = rng.uniform_pos();
    z.H.resize(p.r(), p.n());
    for (Index i = 0; i < z.H.size(); ++i) z.H.data()[i] = rng.uniform_pos();

    if (scaled) {
        const double wh_sum =
            z.W.colwise().sum().dot(z.H.rowwise().sum().transpose());
        const double alpha = std::sqrt(x_sum / wh_sum);
        z.W *= alpha;
        z.H *= alpha;
    }
    return z;
}

RatingsMatrix load_movielens(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_movielens: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_movielens: empty file");
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("userId,movieId,rating", 0) != 0)
        throw std::runtime_error(
            "load_movielens: expected header 'userId,movieId,rating,"
            "timestamp', got '" + line + "'");

    struct Entry {
        std::int64_t user, movie;
        double rating;
    };
    std::vector<Entry> entries;
    std::set<std::int64_t> users, movies;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Entry e{};
        char* end = nullptr;
        const char* s = line.c_str();
        e.user = std::strtoll(s, &end, 10);
        if (end == s || *end != ',')
            throw std::runtime_error("load_movielens: bad userId at line " +
                                     std::to_string(lineno));
        s = end + 1;
        e.movie = std::strtoll(s, &end, 10);
        if (end == s || *end != ',')
            throw std::runtime_error("load_movielens: bad movieId at line " +
                                     std::to_string(lineno));
        s = end + 1;
        e.rating = std::strtod(s, &end);
        if (end == s || (*end != ',' && *end != '\0'))
            throw std::runtime_error("load_movielens: bad rating at line " +
                                     std::to_string(lineno));
        if (e.rating < 0.0)
            throw std::runtime_error(
                "load_movielens: negative rating at line " +
                std::to_string(lineno));
        entries.push_back(e);
        users.insert(e.user);
        movies.insert(e.movie);
    }
    if (entries.empty())
        throw std::runtime_error("load_movielens: no ratings in file");

    RatingsMatrix out;
    out.item_ids.assign(movies.begin(), movies.end());
    out.user_ids.assign(users.begin(), users.end());
    std::map<std::int64_t, Index> movie_row, user_col;
    for (Index i = 0; i < static_cast<Index>(out.item_ids.size()); ++i)
        movie_row[out.item_ids[i]] = i;
    for (Index j = 0; j < static_cast<Index>(out.user_ids.size()); ++j)
        user_col[out.user_ids[j]] = j;

    out.X = Matrix::Zero(static_cast<Index>(out.item_ids.size()),
                         static_cast<Index>(out.user_ids.size()));
    for (const Entry& e : entries)
        out.X(movie_row[e.movie], user_col[e.user]) = e.rating;
    return out;
}

void write_matrix_csv(const Matrix& a, const std::string& path) {
    FILE* f = open_or_throw(path, "w");
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j)
            std::fprintf(f, j == 0 ? "%.17g" : ",%.17g", a(i, j));
        std::fputc('\n', f);
    }
    std::fclose(f);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_matrix_csv: cannot open '" + path +
                                 "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        const char* s = line.c_str();
        char* end = nullptr;
        for (;;) {
            const double v = std::strtod(s, &end);
            if (end == s)
                throw std::runtime_error(
                    "read_matrix_csv: bad number at line " +
                    std::to_string(lineno));
            row.push_back(v);
            if (*end == ',')
                s = end + 1;
            else if (*end == '\0')
                break;
            else
                throw std::runtime_error(
                    "read_matrix_csv: unexpected character at line " +
                    std::to_string(lineno));
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("read_matrix_csv: ragged row at line " +
                                     std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("read_matrix_csv: empty file");
    Matrix a(static_cast<Index>(rows.size()),
             static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            a(i, j) = rows[static_cast<std::size_t>(i)]
                          [static_cast<std::size_t>(j)];
    return a;
}

const char* const kTraceCsvHeader =
    "iter,time_s,objective,potential,rel_error,kkt_w,kkt_h,restart_reason,"
    "lambda_w,lambda_h";

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
    FILE* f = open_or_throw(path, "w");
    std::fprintf(f, "%s\n", kTraceCsvHeader);
    for (const TraceRecord& r : trace.records) {
        const char* reason =
            r.step_failed ? "step_failure" : to_string(r.restart);
        std::fprintf(f,
                     "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g,"
                     "%.17g\n",
                     static_cast<long long>(r.iter), r.time_s, r.objective,
                     r.potential, r.rel_error, r.kkt_w, r.kkt_h, reason,
                     r.lambda_w, r.lambda_h);
    }
    std::fclose(f);
}

void write_manifest(
    const std::vector<std::pair<std::string, std::string>>& kv,
    const std::string& path) {
    FILE* f = open_or_throw(path, "w");
    for (const auto& [k, v] : kv)
        std::fprintf(f, "%s=%s\n", k.c_str(), v.c_str());
    std::fclose(f);
}

}  // namespace klnmf
