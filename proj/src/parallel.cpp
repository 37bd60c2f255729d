#include "crn/parallel.hpp"

#include <algorithm>

namespace crn {

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

WorkerPool::WorkerPool(int workers) : workers_(std::max(1, workers)) {
  threads_.reserve(static_cast<std::size_t>(workers_ - 1));
  for (int id = 1; id < workers_; ++id) threads_.emplace_back(&WorkerPool::worker_loop, this, id);
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (std::thread& t : threads_) t.join();
}

void WorkerPool::run(const std::function<void(int)>& task) {
  if (workers_ == 1) {
    task(0);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    pending_ = workers_ - 1;
    ++generation_;
  }
  start_cv_.notify_all();
  task(0);
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [this] { return pending_ == 0; });
  task_ = nullptr;
}

void WorkerPool::worker_loop(int id) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(int)>* task = nullptr;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      task = task_;
    }
    (*task)(id);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }
}

double tree_sum(std::vector<double> partials) {
  if (partials.empty()) return 0.0;
  while (partials.size() > 1) {
    std::size_t h = 0;
    for (std::size_t i = 0; i + 1 < partials.size(); i += 2) partials[h++] = partials[i] + partials[i + 1];
    if (partials.size() % 2) partials[h++] = partials.back();
    partials.resize(h);
  }
  return partials[0];
}

Eigen::VectorXd tree_sum(std::vector<Eigen::VectorXd> partials) {
  if (partials.empty()) return Eigen::VectorXd();
  while (partials.size() > 1) {
    std::size_t h = 0;
    for (std::size_t i = 0; i + 1 < partials.size(); i += 2) partials[h++] = partials[i] + partials[i + 1];
    if (partials.size() % 2) partials[h++] = std::move(partials.back());
    partials.resize(h);
  }
  return partials[0];
}

}  // namespace crn
