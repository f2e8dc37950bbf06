#pragma once

#include "spot/numerics/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spot::num {

/// Adjoint rule: reads the output gradient and accumulates into the inputs.
using Adjoint = std::function<void(const Tensor& output)>;

/// Ordered record of differentiable operations for one forward pass.
///
/// Entries are appended as operations execute, so the record is already in
/// topological order. backward() replays it in reverse.
class Tape {
public:
    struct Entry {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        Adjoint adjoint;
    };

    void record(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint);

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains_output(const Tensor& t) const;
    void clear() noexcept { entries_.clear(); }

private:
    std::vector<Entry> entries_;
};

/// The tape that operations on the calling thread record into, or nullptr.
Tape* active_tape() noexcept;

/// Installs a tape as active for the current thread for the scope's lifetime.
class TapeScope {
public:
    explicit TapeScope(Tape& tape) noexcept;
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

/// Suspends recording on the current thread (inference, optimizer updates).
class NoGradScope {
public:
    NoGradScope() noexcept;
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

private:
    Tape* previous_;
};

/// Records `output` as produced from `inputs` when a tape is active and at
/// least one input requires a gradient. Returns `output` (marked as
/// requiring grad when recorded). Custom fused operations use this to join
/// the tape.
Tensor record_op(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint);

/// Reverse-mode sweep. `loss` must be a one-element tensor produced on `tape`.
/// Gradients accumulate additively into every reachable requires-grad tensor.
void backward(Tape& tape, const Tensor& loss);

} // namespace spot::num
