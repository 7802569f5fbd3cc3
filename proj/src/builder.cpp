#include "ofz/builder.hpp"

namespace ofz {

ProgramImage ProgramBuilder::finish(uint32_t entry) {
    for (const Fixup& fx : fixups_) {
        const uint32_t target = labels_[fx.label];
        if (target == kUnbound)
            throw Error(ErrorCode::MalformedImage, "unbound label");
        // Displacement is relative to the end of the 3-byte branch.
        const int64_t disp = static_cast<int64_t>(target) -
                             (static_cast<int64_t>(fx.at) + 2);
        if (disp < INT16_MIN || disp > INT16_MAX)
            throw Error(ErrorCode::ImageTooLarge, "branch displacement overflow");
        code_[fx.at] = static_cast<uint8_t>(disp & 0xff);
        code_[fx.at + 1] = static_cast<uint8_t>((disp >> 8) & 0xff);
    }
    return load_image(code_, entry);
}

}  // namespace ofz
