#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace sgdkit {

// Work partitioning for batch reductions. The chunk count depends only on n,
// never on the worker count, so per-chunk partial sums combined in chunk
// order give bit-identical results for any pool size.
struct ChunkPlan {
    std::size_t chunks;
    std::size_t chunk_size;

    std::size_t begin(std::size_t c) const { return c * chunk_size; }
    std::size_t end(std::size_t c, std::size_t n) const {
        const std::size_t e = (c + 1) * chunk_size;
        return e < n ? e : n;
    }
};

inline ChunkPlan plan_chunks(std::size_t n, std::size_t min_chunk = 64,
                             std::size_t max_chunks = 16) {
    if (n == 0) return {0, 0};
    std::size_t chunks = (n + min_chunk - 1) / min_chunk;
    if (chunks > max_chunks) chunks = max_chunks;
    const std::size_t chunk_size = (n + chunks - 1) / chunks;
    chunks = (n + chunk_size - 1) / chunk_size;
    return {chunks, chunk_size};
}

// Shared fork-join pool. Callers submit an indexed task set and help drain
// the queue while waiting, so concurrent experiment runs interleave without
// deadlock. Tasks must not block.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    std::size_t concurrency() const { return workers_.size() + 1; }

    void run(std::size_t count, const std::function<void(std::size_t)>& body) {
        if (count == 0) return;
        if (count == 1 || workers_.empty()) {
            for (std::size_t i = 0; i < count; ++i) body(i);
            return;
        }
        auto job = std::make_shared<Job>(count, &body);
        {
            std::lock_guard lock(mutex_);
            jobs_.push_back(job);
        }
        cv_.notify_all();
        while (job->run_one()) {
        }
        std::unique_lock lock(job->wait_mutex);
        job->wait_cv.wait(lock, [&] { return job->done.load() == count; });
        if (job->error) std::rethrow_exception(job->error);
    }

    ~ThreadPool() {
        {
            std::lock_guard lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

private:
    struct Job {
        Job(std::size_t n, const std::function<void(std::size_t)>* b) : count(n), body(b) {}

        bool run_one() {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return false;
            try {
                (*body)(i);
            } catch (...) {
                std::lock_guard lock(wait_mutex);
                if (!error) error = std::current_exception();
            }
            if (done.fetch_add(1) + 1 == count) {
                std::lock_guard lock(wait_mutex);
                wait_cv.notify_all();
            }
            return true;
        }

        bool exhausted() const { return next.load() >= count; }

        std::size_t count;
        const std::function<void(std::size_t)>* body;
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> done{0};
        std::mutex wait_mutex;
        std::condition_variable wait_cv;
        std::exception_ptr error;
    };

    ThreadPool() {
        std::size_t n = std::thread::hardware_concurrency();
        if (const char* env = std::getenv("SGDKIT_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) n = static_cast<std::size_t>(v);
        }
        if (n == 0) n = 1;
        for (std::size_t i = 0; i + 1 < n; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }

    void worker_loop() {
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
                if (stop_) return;
                job = jobs_.front();
                if (job->exhausted()) {
                    jobs_.pop_front();
                    continue;
                }
            }
            while (job->run_one()) {
            }
        }
    }

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::shared_ptr<Job>> jobs_;
    std::vector<std::thread> workers_;
    bool stop_ = false;
};

}  // namespace sgdkit
