#pragma once

#include <optional>
#include <string_view>

namespace flightrag {

// Codes 1-6 are the bracketed replies of the classification prompt.
enum class QuestionCategory {
    straightforward = 0,
    taq = 1,   // time ambiguous
    bgq = 2,   // board gate
    nfq = 3,   // next flight
    twaq = 4,  // time with airline
    bqa = 5,   // board question of airline
    afq = 6,   // ambiguous flight number
};

inline constexpr QuestionCategory kAmbiguousCategories[] = {
    QuestionCategory::taq, QuestionCategory::bgq, QuestionCategory::nfq,
    QuestionCategory::twaq, QuestionCategory::bqa, QuestionCategory::afq};

std::string_view category_name(QuestionCategory c);
std::optional<QuestionCategory> parse_category(std::string_view name);

inline int category_code(QuestionCategory c) { return static_cast<int>(c); }

}  // namespace flightrag
