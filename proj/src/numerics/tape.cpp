#include "spot/numerics/tape.hpp"

#include <algorithm>

namespace spot::num {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint) {
    entries_.push_back(Entry{std::move(op), std::move(inputs), std::move(output), std::move(adjoint)});
}

bool Tape::contains_output(const Tensor& t) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const Entry& e) { return e.output.is_same(t); });
}

Tape* active_tape() noexcept { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) noexcept : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() noexcept : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tensor record_op(std::string op, std::vector<Tensor> inputs, Tensor output, Adjoint adjoint) {
    Tape* tape = g_active_tape;
    if (!tape) return output;
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
    if (!needs) return output;
    output.set_requires_grad(true);
    tape->record(std::move(op), std::move(inputs), output, std::move(adjoint));
    return output;
}

void backward(Tape& tape, const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    }
    const auto& entries = tape.entries();
    auto last = std::find_if(entries.rbegin(), entries.rend(),
                             [&](const Tape::Entry& e) { return e.output.is_same(loss); });
    if (last == entries.rend()) {
        throw std::invalid_argument("backward: loss was not produced on this tape");
    }
    // Intermediate gradients from an earlier sweep over the same tape would double count.
    for (const auto& e : entries) e.output.clear_grad();
    loss.grad_mut()[0] = 1.0;

    for (auto it = last; it != entries.rend(); ++it) {
        if (!it->output.has_grad()) continue;
        it->adjoint(it->output);
    }
}

} // namespace spot::num
