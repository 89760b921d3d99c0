#pragma once

// Fixed-size worker pool running index ranges with a static partition. The
// calling thread takes the first chunk, so a pool of size 1 spawns no thread.

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace racesim {

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers = 1) : size_(workers == 0 ? 1 : workers) {
    for (std::size_t w = 1; w < size_; ++w) threads_.emplace_back([this, w] { loop(w); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const { return size_; }

  // Calls fn(i) for every i in [0, n). Chunk w is [w*n/size, (w+1)*n/size).
  // The first exception thrown by any chunk is rethrown here.
  void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (size_ == 1 || n <= 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::lock_guard lock(mu_);
      job_ = &fn;
      n_ = n;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_cv_.notify_all();
    run_chunk(0);
    std::unique_lock lock(mu_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void run_chunk(std::size_t w) {
    const std::size_t lo = w * n_ / size_;
    const std::size_t hi = (w + 1) * n_ / size_;
    try {
      for (std::size_t i = lo; i < hi; ++i) (*job_)(i);
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void loop(std::size_t w) {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      run_chunk(w);
      {
        std::lock_guard lock(mu_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  std::size_t size_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t n_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace racesim
