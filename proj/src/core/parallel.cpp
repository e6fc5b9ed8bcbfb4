#include "edgepaint/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace ep {

namespace {

int g_num_threads = 0;

class Pool {
 public:
  explicit Pool(int workers) {
    for (int i = 0; i < workers; ++i)
      threads_.emplace_back([this, i] { worker_loop(i + 1); });
  }

  ~Pool() {
    {
      std::unique_lock lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int width() const { return int(threads_.size()) + 1; }

  void run(std::int64_t begin, std::int64_t end,
           const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const int lanes = width();
    const std::int64_t total = end - begin;
    const std::int64_t chunk = (total + lanes - 1) / lanes;
    {
      std::unique_lock lk(mu_);
      job_ = &fn;
      job_begin_ = begin;
      job_end_ = end;
      job_chunk_ = chunk;
      pending_ = lanes - 1;
      ++epoch_;
    }
    cv_.notify_all();
    run_lane(0);
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_lane(int lane) {
    const std::int64_t b = job_begin_ + lane * job_chunk_;
    const std::int64_t e = std::min(job_end_, b + job_chunk_);
    if (b < e) (*job_)(b, e);
  }

  void worker_loop(int lane) {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stop_ || epoch_ != seen; });
        if (stop_) return;
        seen = epoch_;
      }
      run_lane(lane);
      {
        std::unique_lock lk(mu_);
        if (--pending_ == 0) done_cv_.notify_one();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(std::int64_t, std::int64_t)>* job_ = nullptr;
  std::int64_t job_begin_ = 0, job_end_ = 0, job_chunk_ = 0;
  int pending_ = 0;
  std::uint64_t epoch_ = 0;
  bool stop_ = false;
};

Pool& pool() {
  static Pool p(num_threads() - 1);
  return p;
}

}  // namespace

void set_num_threads(int n) { g_num_threads = n; }

int num_threads() {
  if (g_num_threads > 0) return g_num_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

void parallel_for_chunked(std::int64_t begin, std::int64_t end,
                          const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (end <= begin) return;
  if (num_threads() <= 1 || end - begin == 1) {
    fn(begin, end);
    return;
  }
  pool().run(begin, end, fn);
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn) {
  parallel_for_chunked(begin, end, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace ep
