#include "ofz/vm.hpp"

namespace ofz {

Snapshot take_snapshot(const ProgramImage& image) {
    return Snapshot{image.bytes, image.entry, image.input_len_max};
}

ProgramImage restore(const Snapshot& snapshot) {
    ProgramImage image;
    image.bytes = snapshot.image_bytes;
    image.entry = snapshot.entry;
    image.input_len_max = snapshot.input_len_max;
    return image;
}

const char* exec_kind_name(ExecKind k) {
    switch (k) {
        case ExecKind::CleanExit: return "clean-exit";
        case ExecKind::Crash: return "crash";
        case ExecKind::Timeout: return "timeout";
        case ExecKind::Trap: return "trap";
    }
    return "?";
}

ExecOutcome execute(const ProgramImage& image, std::span<const uint8_t> input,
                    ExecBudget budget) {
    return detail::run_vm(image, input, budget, nullptr);
}

}  // namespace ofz
