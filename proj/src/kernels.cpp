#include "factdetect/kernels.hpp"

#include <algorithm>

#include <omp.h>

#include "factdetect/embeddings.hpp"
#include "factdetect/errors.hpp"
#include "factdetect/rng.hpp"

namespace factdetect::kernels {

namespace {

void check_batch(const SimilarityBatch& b) {
    if (b.dim == 0 || b.facts.size() % b.dim != 0) throw DataError("fact matrix is not a multiple of dim");
    if (b.claim.size() != b.dim || b.evidence.size() != b.dim)
        throw DataError("cosine: dimension mismatch between facts and claim/evidence");
    auto zero = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    if (zero(b.claim) || zero(b.evidence)) throw DataError("cosine: zero-norm vector");
    for (std::size_t off = 0; off < b.facts.size(); off += b.dim)
        if (zero(b.facts.subspan(off, b.dim))) throw DataError("cosine: zero-norm vector");
}

double score_row(const SimilarityBatch& b, std::size_t row) {
    auto f = b.facts.subspan(row * b.dim, b.dim);
    return b.gamma * (cosine(f, b.claim) + cosine(f, b.evidence));
}

void check_perm(const PermutationInput& in) {
    if (in.gold.size() != in.a.size() || in.gold.size() != in.b.size())
        throw DataError("permutation test needs paired predictions");
    if (in.n_classes < 1) throw DataError("n_classes must be positive");
}

struct Counts {
    std::vector<long> tp, fp, fn, gold;
    explicit Counts(int k) : tp(k), fp(k), fn(k), gold(k) {}
};

double macro_from_counts(const Counts& c, int n_classes, bool include_absent) {
    double sum = 0.0;
    int classes = 0;
    for (int k = 0; k < n_classes; ++k) {
        if (!include_absent && c.gold[k] == 0) continue;
        double p = (c.tp[k] + c.fp[k]) ? double(c.tp[k]) / double(c.tp[k] + c.fp[k]) : 0.0;
        double r = (c.tp[k] + c.fn[k]) ? double(c.tp[k]) / double(c.tp[k] + c.fn[k]) : 0.0;
        sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
        ++classes;
    }
    return classes ? sum / classes : 0.0;
}

double one_permutation(const PermutationInput& in, std::size_t iteration, Counts& ca, Counts& cb) {
    const int k = in.n_classes;
    for (auto* c : {&ca, &cb}) {
        std::fill(c->tp.begin(), c->tp.end(), 0);
        std::fill(c->fp.begin(), c->fp.end(), 0);
        std::fill(c->fn.begin(), c->fn.end(), 0);
        std::fill(c->gold.begin(), c->gold.end(), 0);
    }
    rng::SplitMix64 gen(rng::stream_seed(in.seed, iteration));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < in.gold.size(); ++i) {
        if (i % 64 == 0) bits = gen.next();
        bool swap = (bits >> (i % 64)) & 1U;
        int g = in.gold[i];
        int pa = swap ? in.b[i] : in.a[i];
        int pb = swap ? in.a[i] : in.b[i];
        for (auto [c, p] : {std::pair{&ca, pa}, std::pair{&cb, pb}}) {
            if (g < 0 || g >= k || p < 0 || p >= k) throw DataError("label index out of range");
            ++c->gold[g];
            if (p == g) {
                ++c->tp[g];
            } else {
                ++c->fp[p];
                ++c->fn[g];
            }
        }
    }
    return macro_from_counts(ca, k, in.include_absent) - macro_from_counts(cb, k, in.include_absent);
}

}  // namespace

double macro_f1(std::span<const int> gold, std::span<const int> pred, int n_classes, bool include_absent) {
    if (gold.size() != pred.size()) throw DataError("macro_f1: size mismatch");
    Counts c(n_classes);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        int g = gold[i], p = pred[i];
        if (g < 0 || g >= n_classes || p < 0 || p >= n_classes) throw DataError("label index out of range");
        ++c.gold[g];
        if (p == g) {
            ++c.tp[g];
        } else {
            ++c.fp[p];
            ++c.fn[g];
        }
    }
    return macro_from_counts(c, n_classes, include_absent);
}

namespace serial {

std::vector<double> similarity_scores(const SimilarityBatch& batch) {
    check_batch(batch);
    const std::size_t n = batch.facts.size() / batch.dim;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = score_row(batch, i);
    return out;
}

std::vector<double> permutation_deltas(const PermutationInput& in) {
    check_perm(in);
    std::vector<double> out(in.iterations);
    Counts ca(in.n_classes), cb(in.n_classes);
    for (std::size_t it = 0; it < in.iterations; ++it) out[it] = one_permutation(in, it, ca, cb);
    return out;
}

}  // namespace serial

namespace omp {

std::vector<double> similarity_scores(const SimilarityBatch& batch) {
    check_batch(batch);
    const auto n = static_cast<std::ptrdiff_t>(batch.facts.size() / batch.dim);
    std::vector<double> out(static_cast<std::size_t>(n));
    // check_batch rejects zero rows, so score_row cannot throw inside the region.
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score_row(batch, static_cast<std::size_t>(i));
    return out;
}

std::vector<double> permutation_deltas(const PermutationInput& in) {
    check_perm(in);
    for (std::size_t i = 0; i < in.gold.size(); ++i)
        for (int v : {in.gold[i], in.a[i], in.b[i]})
            if (v < 0 || v >= in.n_classes) throw DataError("label index out of range");
    std::vector<double> out(in.iterations);
    const auto iters = static_cast<std::ptrdiff_t>(in.iterations);
#pragma omp parallel
    {
        Counts ca(in.n_classes), cb(in.n_classes);
#pragma omp for schedule(static)
        for (std::ptrdiff_t it = 0; it < iters; ++it)
            out[it] = one_permutation(in, static_cast<std::size_t>(it), ca, cb);
    }
    return out;
}

}  // namespace omp

}  // namespace factdetect::kernels
