#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace klturb {

/// Streaming mean / second central moment of a fixed-length vector of quantities.
class Estimator {
public:
    Estimator() = default;
    explicit Estimator(std::size_t width);

    std::size_t width() const { return mean_.size(); }
    std::uint64_t count() const { return count_; }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& m2() const { return m2_; }

    /// Welford update. Non-finite entries throw NumericalError; nothing is skipped.
    void accumulate(std::span<const double> values);
    void accumulate(double value) { accumulate(std::span<const double>(&value, 1)); }

    double mean(std::size_t i) const { return mean_.at(i); }
    /// Unbiased sample variance m2 / (n - 1); NaN for n < 2.
    double variance(std::size_t i) const;
    /// sqrt(m2 / (n (n - 1))); NaN for n < 2.
    double standard_error(std::size_t i) const;
    bool has_standard_error() const { return count_ >= 2; }

private:
    friend Estimator merge(const Estimator& a, const Estimator& b);
    std::uint64_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Chan et al. parallel combination. Throws ValidationError on width mismatch.
Estimator merge(const Estimator& a, const Estimator& b);

/// Draws per reduction leaf. Fixed so the reduction tree depends only on the draw count.
inline constexpr std::uint64_t chunk_draws = 256;

/// Fills `out` (length width) with the quantities of draw `draw`. Must be thread-safe.
using DrawFunction = std::function<void(std::uint64_t draw, std::span<double> out)>;

/// Runs draws [0, draws) on up to `workers` threads (0 = hardware concurrency).
/// Each fixed-size chunk is accumulated in draw order, then chunks are merged by a
/// pairwise tree over chunk indices, so the result is bit-identical for any worker count.
Estimator run_monte_carlo(std::uint64_t draws, std::size_t width, unsigned workers, const DrawFunction& fn);

unsigned resolve_workers(unsigned requested);

}  // namespace klturb
