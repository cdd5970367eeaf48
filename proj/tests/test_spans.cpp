#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <string>
#include <vector>

#include "slim/rng.hpp"
#include "slim/spans.hpp"

using namespace slim;
using Tags = std::vector<std::string>;

namespace {

bool is_canonical(const Tags& tags) {
    std::string open; // type of the span covering the previous token, if any
    for (const auto& t : tags) {
        if (t == "O") {
            open.clear();
        } else if (t[0] == 'B') {
            open = t.substr(2);
        } else { // I-x must continue an open span of the same type
            if (open != t.substr(2)) return false;
        }
    }
    return true;
}

void enumerate(const std::vector<std::string>& alphabet, std::size_t len, Tags& cur,
               const std::function<void(const Tags&)>& visit) {
    if (cur.size() == len) {
        visit(cur);
        return;
    }
    for (const auto& t : alphabet) {
        cur.push_back(t);
        enumerate(alphabet, len, cur, visit);
        cur.pop_back();
    }
}

} // namespace

TEST_CASE("listen-to-westbam tags decode to the three expected spans") {
    Tags tags = {"O", "O", "B-artist", "O", "B-album", "O", "B-service", "I-service"};
    auto spans = tags_to_spans(tags);
    REQUIRE(spans.size() == 3);
    CHECK(spans[0] == SlotSpan{2, 3, "artist", ""});
    CHECK(spans[1] == SlotSpan{4, 5, "album", ""});
    CHECK(spans[2] == SlotSpan{6, 8, "service", ""});
}

TEST_CASE("all-O and orphan-I cases") {
    CHECK(tags_to_spans({"O", "O", "O"}).empty());
    auto repaired = tags_to_spans({"I-city"});
    REQUIRE(repaired.size() == 1);
    CHECK(repaired[0] == SlotSpan{0, 1, "city", ""});
}

TEST_CASE("unknown labels are rejected") {
    CHECK_THROWS_AS(tags_to_spans({"B"}), FormatError);
    CHECK_THROWS_AS(tags_to_spans({"X-artist"}), FormatError);
    CHECK_THROWS_AS(tags_to_spans({"B-"}), FormatError);
    CHECK_THROWS_AS(tags_to_spans({"o"}), FormatError);
    CHECK_THROWS_AS(tags_to_spans({""}), FormatError);
}

TEST_CASE("spans_to_tags basics and error cases") {
    CHECK(spans_to_tags({}, 3) == Tags{"O", "O", "O"});
    CHECK(spans_to_tags({{0, 2, "artist", ""}}, 2) == Tags{"B-artist", "I-artist"});
    CHECK_THROWS_AS(spans_to_tags({{0, 2, "a", ""}, {1, 3, "b", ""}}, 3), ContractError);
    CHECK_THROWS_AS(spans_to_tags({{0, 3, "a", ""}}, 2), ContractError);
    CHECK_THROWS_AS(spans_to_tags({{1, 1, "a", ""}}, 2), ContractError);
}

TEST_CASE("exhaustive round trip over a 2-type alphabet up to length 6") {
    std::vector<std::string> alphabet = {"O", "B-a", "I-a", "B-b", "I-b"};
    std::size_t visited = 0;
    for (std::size_t len = 1; len <= 6; ++len) {
        Tags cur;
        enumerate(alphabet, len, cur, [&](const Tags& tags) {
            ++visited;
            auto spans = tags_to_spans(tags);
            for (std::size_t i = 0; i < spans.size(); ++i) {
                CHECK(spans[i].start < spans[i].end);
                CHECK(spans[i].end <= tags.size());
                if (i > 0) CHECK(spans[i - 1].end <= spans[i].start);
            }
            Tags round = spans_to_tags(spans, tags.size());
            if (is_canonical(tags)) {
                CHECK(round == tags);
            } else {
                // repair is idempotent
                CHECK(spans_to_tags(tags_to_spans(round), round.size()) == round);
            }
        });
    }
    CHECK(visited == 5 + 25 + 125 + 625 + 3125 + 15625);
}

TEST_CASE("random long sequences round trip") {
    std::vector<std::string> alphabet = {"O",   "B-a", "I-a", "B-b", "I-b",
                                         "B-c", "I-c", "B-d", "I-d"};
    Rng rng(404);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t len = static_cast<std::size_t>(rng.uniform_int(1, 50));
        Tags tags(len);
        for (auto& t : tags) t = alphabet[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(alphabet.size()) - 1))];
        auto spans = tags_to_spans(tags);
        Tags round = spans_to_tags(spans, len);
        CHECK(is_canonical(round));
        if (is_canonical(tags)) CHECK(round == tags);
        CHECK(spans_to_tags(tags_to_spans(round), len) == round);
    }
}

TEST_CASE("build_slot_masks pads, truncates and reports overflow") {
    std::vector<SlotSpan> three = {{0, 1, "a", ""}, {2, 4, "b", ""}, {5, 6, "c", ""}};
    SlotMaskSet set = build_slot_masks(three, 7, 6);
    REQUIRE(set.masks.size() == 6);
    CHECK(set.count == 3);
    CHECK(set.overflow == 0);
    for (std::size_t m = 0; m < 3; ++m) {
        double sum = 0.0;
        for (double v : set.masks[m]) sum += v;
        CHECK(sum == static_cast<double>(three[m].end - three[m].start));
    }
    for (std::size_t m = 3; m < 6; ++m)
        for (double v : set.masks[m]) CHECK(v == 0.0);

    SlotMaskSet empty = build_slot_masks({}, 4, 6);
    CHECK(empty.count == 0);
    for (const auto& mask : empty.masks)
        for (double v : mask) CHECK(v == 0.0);

    std::vector<SlotSpan> eight;
    for (std::size_t i = 0; i < 8; ++i) eight.push_back({i, i + 1, "t", ""});
    SlotMaskSet trunc = build_slot_masks(eight, 8, 6);
    CHECK(trunc.count == 6);
    CHECK(trunc.overflow == 2);
    CHECK(trunc.masks[5][5] == 1.0);
}
