#pragma once

#include <Eigen/Dense>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace crn {

int default_workers();

// Fixed set of worker threads; run(task) invokes task(w) for w = 0..W-1
// concurrently (the caller acts as worker 0) and returns when all are done.
// Work must be partitioned by worker id so that results land in
// pre-assigned slots; this keeps every reduction worker-count independent.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int workers() const { return workers_; }
  void run(const std::function<void(int)>& task);

 private:
  void worker_loop(int id);

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* task_ = nullptr;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

// Pairwise tree summation over partials in slot order; the result depends
// only on the partials, never on how many workers produced them.
double tree_sum(std::vector<double> partials);
Eigen::VectorXd tree_sum(std::vector<Eigen::VectorXd> partials);

}  // namespace crn
