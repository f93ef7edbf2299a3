// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "wcs/sim/workcell.hpp"

namespace wcs {

/// Owns the live workcell on a dedicated thread. Commands arrive through a
/// serialized queue and execute one at a time; callers block on the result.
class SimHost {
public:
    explicit SimHost(Workcell cell) : cell_(std::move(cell)) {}

    ~SimHost() {
        if (running_) stop();
    }

    SimHost(const SimHost&) = delete;
    SimHost& operator=(const SimHost&) = delete;

    void start() {
        std::lock_guard<std::mutex> lock(mutex_);
        if (running_) throw std::logic_error("simulation already started");
        running_ = true;
        worker_ = std::thread([this] { worker_loop(); });
    }

    void stop() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (!running_) throw std::logic_error("simulation is not running");
            running_ = false;
        }
        cv_.notify_all();
        worker_.join();
        ++stop_count_;
    }

    bool running() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return running_;
    }

    int stop_count() const { return stop_count_; }

    /// Runs fn(workcell) on the simulation thread and returns its result;
    /// exceptions propagate to the caller.
    template <typename F>
    auto call(F&& fn) -> std::invoke_result_t<F, Workcell&> {
        using R = std::invoke_result_t<F, Workcell&>;
        auto task = std::make_shared<std::packaged_task<R()>>(
            [this, f = std::forward<F>(fn)]() mutable { return f(cell_); });
        auto future = task->get_future();
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (!running_) throw std::logic_error("simulation is not running");
            queue_.push_back([task] { (*task)(); });
        }
        cv_.notify_one();
        return future.get();
    }

private:
    void worker_loop() {
        while (true) {
            std::function<void()> job;
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [this] { return !queue_.empty() || !running_; });
                if (queue_.empty() && !running_) return;
                job = std::move(queue_.front());
                queue_.pop_front();
            }
            job();
        }
    }

    Workcell cell_;
    std::thread worker_;
    std::deque<std::function<void()>> queue_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    bool running_ = false;
    int stop_count_ = 0;
};

}  // namespace wcs
