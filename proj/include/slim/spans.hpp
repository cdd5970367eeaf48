#pragma once

#include <string>
#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// Half-open token range [start, end) carrying a slot type and, once known,
/// the slot-level intent.
struct SlotSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string slot_type;
    std::string intent; // empty until assigned

    bool operator==(const SlotSpan& o) const {
        return start == o.start && end == o.end && slot_type == o.slot_type && intent == o.intent;
    }
};

/// Fixed-size bundle of binary token masks, one per slot, padded with
/// all-zero masks up to max_slots.
struct SlotMaskSet {
    std::vector<std::vector<real>> masks;
    std::size_t count = 0;    // real (non-padding) masks
    std::size_t overflow = 0; // spans dropped beyond max_slots
};

/// Decode an IOB sequence into maximal spans. Lenient: an I-x without a
/// preceding B-x/I-x of the same type opens a new span. Labels must be "O",
/// "B-<type>" or "I-<type>".
std::vector<SlotSpan> tags_to_spans(const std::vector<std::string>& tags);

/// Inverse of tags_to_spans on canonical sequences. Span intents are ignored.
std::vector<std::string> spans_to_tags(const std::vector<SlotSpan>& spans, std::size_t n);

/// One mask per span (1 on its token positions), first max_slots spans kept
/// in order, the rest padded with zero masks. Dropped spans are counted in
/// overflow.
SlotMaskSet build_slot_masks(const std::vector<SlotSpan>& spans, std::size_t n,
                             std::size_t max_slots);

} // namespace slim
