#include "klturb/mcstats.hpp"

#include "klturb/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace klturb {

Estimator::Estimator(std::size_t width) : mean_(width, 0.0), m2_(width, 0.0) {}

void Estimator::accumulate(std::span<const double> values)
{
    if (values.size() != mean_.size())
        throw ValidationError("estimator width " + std::to_string(mean_.size()) + " got " +
                              std::to_string(values.size()) + " values");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw NumericalError("non-finite Monte Carlo sample in component " + std::to_string(i) +
                                 " after " + std::to_string(count_) + " samples");
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double delta = values[i] - mean_[i];
        mean_[i] += delta / n;
        m2_[i] += delta * (values[i] - mean_[i]);
    }
}

double Estimator::variance(std::size_t i) const
{
    if (count_ < 2) return std::numeric_limits<double>::quiet_NaN();
    return m2_.at(i) / static_cast<double>(count_ - 1);
}

double Estimator::standard_error(std::size_t i) const
{
    if (count_ < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(count_);
    return std::sqrt(m2_.at(i) / (n * (n - 1.0)));
}

Estimator merge(const Estimator& a, const Estimator& b)
{
    if (a.width() != b.width()) throw ValidationError("cannot merge estimators of different widths");
    if (a.count_ == 0) return b;
    if (b.count_ == 0) return a;
    Estimator out(a.width());
    out.count_ = a.count_ + b.count_;
    const double na = static_cast<double>(a.count_);
    const double nb = static_cast<double>(b.count_);
    const double n = static_cast<double>(out.count_);
    for (std::size_t i = 0; i < a.width(); ++i) {
        const double delta = b.mean_[i] - a.mean_[i];
        out.mean_[i] = a.mean_[i] + delta * nb / n;
        out.m2_[i] = a.m2_[i] + b.m2_[i] + delta * delta * na * nb / n;
    }
    return out;
}

unsigned resolve_workers(unsigned requested)
{
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

namespace {

Estimator tree_reduce(const std::vector<Estimator>& leaves, std::size_t lo, std::size_t hi)
{
    if (hi - lo == 1) return leaves[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return merge(tree_reduce(leaves, lo, mid), tree_reduce(leaves, mid, hi));
}

}  // namespace

Estimator run_monte_carlo(std::uint64_t draws, std::size_t width, unsigned workers, const DrawFunction& fn)
{
    if (draws == 0) return Estimator(width);
    const std::uint64_t n_chunks = (draws + chunk_draws - 1) / chunk_draws;
    std::vector<Estimator> leaves(n_chunks, Estimator(width));
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<bool> failed{false};

    auto work = [&] {
        std::vector<double> buffer(width);
        for (;;) {
            const std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks || failed.load()) return;
            try {
                Estimator e(width);
                const std::uint64_t end = std::min(draws, (c + 1) * chunk_draws);
                for (std::uint64_t d = c * chunk_draws; d < end; ++d) {
                    fn(d, buffer);
                    e.accumulate(buffer);
                }
                leaves[c] = std::move(e);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    const unsigned n_threads =
        static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), n_chunks));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return tree_reduce(leaves, 0, leaves.size());
}

}  // namespace klturb
