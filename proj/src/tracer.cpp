#include "ofz/tracer.hpp"

#include <cinttypes>
#include <cstdio>
#include <unordered_set>

namespace ofz {

TracerImage::TracerImage(ProgramImage image, const ControlFlowGraph& cfg)
    : image_(std::move(image)), is_start_(image_.size(), 0) {
    for (const auto& [start, bb] : cfg.blocks) {
        block_starts_.insert(start);
        is_start_[start] = 1;
    }
    snapshot_ = take_snapshot(image_);
}

TracerImage build_tracer(const ProgramImage& image,
                         const ControlFlowGraph& cfg) {
    return TracerImage(image, cfg);
}

TraceLog TracerImage::trace(std::span<const uint8_t> input,
                            ExecBudget budget) const {
    TraceLog log;
    std::unordered_set<uint32_t> visited;
    const ExecOutcome out =
        detail::run_vm(image_, input, budget, [&](uint32_t pc) {
            if (is_start_[pc] && visited.insert(pc).second)
                log.blocks.push_back(pc);
        });
    log.outcome = out.kind;
    return log;
}

std::set<Edge> TracerImage::trace_edges(std::span<const uint8_t> input,
                                        ExecBudget budget) const {
    std::set<Edge> edges;
    bool have_prev = false;
    uint32_t prev = 0;
    detail::run_vm(image_, input, budget, [&](uint32_t pc) {
        if (!is_start_[pc])
            return;
        if (have_prev)
            edges.insert({prev, pc});
        prev = pc;
        have_prev = true;
    });
    return edges;
}

std::string trace_to_csv(const TraceLog& log) {
    std::string out;
    char buf[16];
    for (uint32_t b : log.blocks) {
        snprintf(buf, sizeof buf, "%" PRIx32 "\n", b);
        out += buf;
    }
    return out;
}

}  // namespace ofz
