#include "slim/spans.hpp"

#include "slim/errors.hpp"

namespace slim {

namespace {

// Splits "B-artist" into kind 'B' and type "artist"; 'O' has no type.
struct ParsedTag {
    char kind; // 'O', 'B' or 'I'
    std::string type;
};

ParsedTag parse_tag(const std::string& tag, std::size_t pos) {
    if (tag == "O") return {'O', ""};
    if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
        return {tag[0], tag.substr(2)};
    throw FormatError("tags_to_spans: unknown label \"" + tag + "\" at position " +
                      std::to_string(pos));
}

} // namespace

std::vector<SlotSpan> tags_to_spans(const std::vector<std::string>& tags) {
    std::vector<SlotSpan> spans;
    bool open = false;
    SlotSpan cur;
    auto close = [&](std::size_t end) {
        if (open) {
            cur.end = end;
            spans.push_back(cur);
            open = false;
        }
    };
    for (std::size_t i = 0; i < tags.size(); ++i) {
        ParsedTag t = parse_tag(tags[i], i);
        if (t.kind == 'O') {
            close(i);
        } else if (t.kind == 'B' || !open || cur.slot_type != t.type) {
            close(i);
            cur = SlotSpan{i, 0, t.type, ""};
            open = true;
        }
        // I-x continuing an open span of the same type: nothing to do
    }
    close(tags.size());
    return spans;
}

std::vector<std::string> spans_to_tags(const std::vector<SlotSpan>& spans, std::size_t n) {
    std::vector<std::string> tags(n, "O");
    for (const auto& s : spans) {
        if (s.start >= s.end || s.end > n)
            throw ContractError("spans_to_tags: span [" + std::to_string(s.start) + ", " +
                                std::to_string(s.end) + ") invalid for length " +
                                std::to_string(n));
        for (std::size_t i = s.start; i < s.end; ++i) {
            if (tags[i] != "O")
                throw ContractError("spans_to_tags: overlapping spans at token " +
                                    std::to_string(i));
            tags[i] = (i == s.start ? "B-" : "I-") + s.slot_type;
        }
    }
    return tags;
}

SlotMaskSet build_slot_masks(const std::vector<SlotSpan>& spans, std::size_t n,
                             std::size_t max_slots) {
    SlotMaskSet set;
    set.masks.assign(max_slots, std::vector<real>(n, 0.0));
    set.count = std::min(spans.size(), max_slots);
    set.overflow = spans.size() - set.count;
    for (std::size_t m = 0; m < set.count; ++m)
        for (std::size_t i = spans[m].start; i < spans[m].end && i < n; ++i)
            set.masks[m][i] = 1.0;
    return set;
}

} // namespace slim
