#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP version
// that must agree bit-for-bit; tests compare them and bench/ times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace factdetect::kernels {

// n_facts x dim row-major matrix of fact embeddings scored against one claim and one
// evidence embedding: gamma * (cos(f, c) + cos(f, e)) per row.
struct SimilarityBatch {
    std::span<const double> facts;
    std::size_t dim = 0;
    std::span<const double> claim;
    std::span<const double> evidence;
    double gamma = 0.5;
};

// Macro-F1 over classes [0, n_classes) from label vectors. Classes absent from gold are
// skipped unless include_absent. Returns 0 if no class qualifies.
double macro_f1(std::span<const int> gold, std::span<const int> pred, int n_classes, bool include_absent);

struct PermutationInput {
    std::span<const int> gold;
    std::span<const int> a;
    std::span<const int> b;
    int n_classes = 3;
    bool include_absent = false;
    std::size_t iterations = 10000;
    std::uint64_t seed = 0;
};

// For each iteration, swaps a[i] and b[i] with probability 1/2 per pair and returns
// macro_f1(a') - macro_f1(b'). Iteration k draws from rng::stream_seed(seed, k), so the
// result does not depend on scheduling.
namespace serial {
std::vector<double> similarity_scores(const SimilarityBatch& batch);
std::vector<double> permutation_deltas(const PermutationInput& in);
}  // namespace serial

namespace omp {
std::vector<double> similarity_scores(const SimilarityBatch& batch);
std::vector<double> permutation_deltas(const PermutationInput& in);
}  // namespace omp

}  // namespace factdetect::kernels
