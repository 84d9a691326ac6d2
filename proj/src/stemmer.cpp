#include "isle/stemmer.hpp"

#include <array>
#include <utility>

namespace isle::text {
namespace {

class Stemmer {
public:
    explicit Stemmer(std::string_view w) : b_(w) {}

    std::string run() {
        if (b_.empty()) {
            return b_;
        }
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5a();
        step5b();
        return b_;
    }

private:
    std::string b_;

    bool is_consonant(std::size_t i) const {
        switch (b_[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_consonant(i - 1);
        default:
            return true;
        }
    }

    // Number of VC sequences in b_[0, len).
    int measure(std::size_t len) const {
        int m = 0;
        std::size_t i = 0;
        while (i < len && is_consonant(i)) ++i;
        while (i < len) {
            while (i < len && !is_consonant(i)) ++i;
            if (i >= len) break;
            while (i < len && is_consonant(i)) ++i;
            ++m;
        }
        return m;
    }

    bool has_vowel(std::size_t len) const {
        for (std::size_t i = 0; i < len; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    bool ends_double_consonant(std::size_t len) const {
        return len >= 2 && b_[len - 1] == b_[len - 2] && is_consonant(len - 1);
    }

    // *o: stem ends consonant-vowel-consonant, final consonant not w, x or y.
    bool ends_cvc(std::size_t len) const {
        if (len < 3) return false;
        if (!is_consonant(len - 1) || is_consonant(len - 2) || !is_consonant(len - 3)) {
            return false;
        }
        char c = b_[len - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends_with(std::string_view suffix) const {
        return b_.size() >= suffix.size() &&
               std::string_view(b_).substr(b_.size() - suffix.size()) == suffix;
    }

    std::size_t stem_len(std::string_view suffix) const { return b_.size() - suffix.size(); }

    void replace_suffix(std::string_view suffix, std::string_view with) {
        b_.resize(stem_len(suffix));
        b_.append(with);
    }

    using Rule = std::pair<std::string_view, std::string_view>;

    // Longest matching suffix wins; if its condition fails nothing happens.
    template <std::size_t N>
    void apply_longest(const std::array<Rule, N>& rules, int min_measure) {
        const Rule* best = nullptr;
        for (const auto& r : rules) {
            if (ends_with(r.first) && (best == nullptr || r.first.size() > best->first.size())) {
                best = &r;
            }
        }
        if (best != nullptr && measure(stem_len(best->first)) > min_measure) {
            replace_suffix(best->first, best->second);
        }
    }

    void step1a() {
        if (ends_with("sses")) {
            replace_suffix("sses", "ss");
        } else if (ends_with("ies")) {
            replace_suffix("ies", "i");
        } else if (ends_with("ss")) {
            // unchanged
        } else if (ends_with("s")) {
            replace_suffix("s", "");
        }
    }

    void step1b() {
        if (ends_with("eed")) {
            if (measure(stem_len("eed")) > 0) {
                replace_suffix("eed", "ee");
            }
            return;
        }
        bool stripped = false;
        if (ends_with("ed") && has_vowel(stem_len("ed"))) {
            replace_suffix("ed", "");
            stripped = true;
        } else if (ends_with("ing") && has_vowel(stem_len("ing"))) {
            replace_suffix("ing", "");
            stripped = true;
        }
        if (!stripped) return;

        if (ends_with("at")) {
            replace_suffix("at", "ate");
        } else if (ends_with("bl")) {
            replace_suffix("bl", "ble");
        } else if (ends_with("iz")) {
            replace_suffix("iz", "ize");
        } else if (ends_double_consonant(b_.size())) {
            char c = b_.back();
            if (c != 'l' && c != 's' && c != 'z') {
                b_.pop_back();
            }
        } else if (measure(b_.size()) == 1 && ends_cvc(b_.size())) {
            b_.push_back('e');
        }
    }

    void step1c() {
        if (ends_with("y") && has_vowel(stem_len("y"))) {
            b_.back() = 'i';
        }
    }

    void step2() {
        static constexpr std::array<Rule, 20> kRules{{
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
        }};
        apply_longest(kRules, 0);
    }

    void step3() {
        static constexpr std::array<Rule, 7> kRules{{
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        }};
        apply_longest(kRules, 0);
    }

    void step4() {
        static constexpr std::array<std::string_view, 19> kSuffixes{
            "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
        };
        std::string_view best;
        for (auto s : kSuffixes) {
            if (ends_with(s) && s.size() > best.size()) best = s;
        }
        if (best.empty()) return;
        std::size_t len = stem_len(best);
        if (measure(len) <= 1) return;
        if (best == "ion" && !(len > 0 && (b_[len - 1] == 's' || b_[len - 1] == 't'))) {
            return;
        }
        b_.resize(len);
    }

    void step5a() {
        if (!ends_with("e")) return;
        std::size_t len = stem_len("e");
        int m = measure(len);
        if (m > 1 || (m == 1 && !ends_cvc(len))) {
            b_.pop_back();
        }
    }

    void step5b() {
        if (measure(b_.size()) > 1 && ends_double_consonant(b_.size()) && b_.back() == 'l') {
            b_.pop_back();
        }
    }
};

} // namespace

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

} // namespace isle::text
