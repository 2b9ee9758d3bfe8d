#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mtat {

/// Persistent worker pool running static range partitions.
///
/// Ranges are split into one contiguous chunk per worker, in fixed order, so
/// per-chunk reductions combined in chunk order are bit-reproducible for a
/// given thread count.
class ThreadPool {
public:
    explicit ThreadPool(int n_threads = 1) : n_(n_threads < 1 ? 1 : n_threads) {
        for (int t = 1; t < n_; ++t) {
            workers_.emplace_back([this, t] { worker_loop(t); });
        }
    }

    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_start_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return n_; }

    /// Run body(chunk_begin, chunk_end, chunk_index) over [begin, end).
    void parallel_for(int begin, int end,
                      const std::function<void(int, int, int)>& body) {
        if (end <= begin) return;
        if (n_ == 1) {
            body(begin, end, 0);
            return;
        }
        {
            std::unique_lock<std::mutex> lk(mu_);
            begin_ = begin;
            end_ = end;
            body_ = &body;
            pending_ = n_ - 1;
            ++epoch_;
        }
        cv_start_.notify_all();
        run_chunk(begin, end, 0);
        std::unique_lock<std::mutex> lk(mu_);
        cv_done_.wait(lk, [this] { return pending_ == 0; });
        body_ = nullptr;
    }

private:
    void run_chunk(int begin, int end, int t) {
        const long total = end - begin;
        const int b = begin + static_cast<int>(total * t / n_);
        const int e = begin + static_cast<int>(total * (t + 1) / n_);
        if (e > b) (*body_)(b, e, t);
    }

    void worker_loop(int t) {
        std::uint64_t seen = 0;
        for (;;) {
            std::unique_lock<std::mutex> lk(mu_);
            cv_start_.wait(lk, [&] { return stop_ || epoch_ != seen; });
            if (stop_) return;
            seen = epoch_;
            const int b = begin_, e = end_;
            lk.unlock();
            run_chunk(b, e, t);
            lk.lock();
            if (--pending_ == 0) cv_done_.notify_one();
        }
    }

    int n_;
    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_start_, cv_done_;
    const std::function<void(int, int, int)>* body_{nullptr};
    int begin_{0}, end_{0};
    int pending_{0};
    std::uint64_t epoch_{0};
    bool stop_{false};
};

} // namespace mtat
