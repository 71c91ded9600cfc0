#pragma once

#include "klnmf/model.hpp"
#include "klnmf/solvers.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace klnmf {

/// Synthetic instance description: X = W* H* with W* drawn i.i.d. uniform
/// and each row of H* drawn from a symmetric Dirichlet over n categories.
/// sparsity is the kept fraction of entries in each ground-truth factor.
struct SynthSpec {
    Index m = 0;
    Index n = 0;
    Index r = 0;
    double sparsity = 1.0;
    std::uint64_t seed = 0;
    double dirichlet_alpha = 1.0;
};

/// Items-by-users ratings matrix; unrated cells are exact zeros.
struct RatingsMatrix {
    Matrix X;
    std::vector<std::int64_t> item_ids;  // row order
    std::vector<std::int64_t> user_ids;  // column order
};

/// Generates the ground truth and the observed matrix. When sparsity < 1,
/// a uniformly chosen complement of entries in each factor is zeroed, with
/// every row and column of each factor forced to keep at least one entry so
/// X stays free of zero rows and columns. Deterministic under the seed.
std::pair<KLProblem, FactorPair> generate_synthetic(
    const SynthSpec& spec, Regularizer reg = Regularizer::none());

/// Random strictly positive initial factors, optionally scaled so that
/// sum(W0 H0) matches sum(X).
FactorPair initial_point(const KLProblem& p, std::uint64_t seed, bool scaled);

/// Reads a `userId,movieId,rating,timestamp` ratings file into an
/// items-by-users matrix: rows follow ascending movieId, columns ascending
/// userId, duplicates resolved last-write-wins.
RatingsMatrix load_movielens(const std::string& path);

/// Dense CSV, one matrix row per line, 17 significant digits (round-trip
/// exact).
void write_matrix_csv(const Matrix& a, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

/// Trace CSV with the fixed column set
/// iter,time_s,objective,potential,rel_error,kkt_w,kkt_h,restart_reason,
/// lambda_w,lambda_h.
void write_trace_csv(const SolverTrace& trace, const std::string& path);

extern const char* const kTraceCsvHeader;

/// Flat key=value manifest.
void write_manifest(const std::vector<std::pair<std::string, std::string>>& kv,
                    const std::string& path);

}  // namespace klnmf
