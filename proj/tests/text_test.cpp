#include <gtest/gtest.h>

#include <random>
#include <string>

#include "dforge/text.hpp"

using namespace dforge;

TEST(Normalize, StripsDiacriticsAndFoldsAlef) {
  EXPECT_EQ(normalize_arabic("أُريدُ"), "اريد");
  EXPECT_EQ(normalize_arabic("إلى"), "الى");
  EXPECT_EQ(normalize_arabic("آكل"), "اكل");
  EXPECT_EQ(normalize_arabic("أَكل"), "اكل");
}

TEST(Normalize, EmptyIsFixedPoint) { EXPECT_EQ(normalize_arabic(""), ""); }

TEST(Normalize, RemovesTatweelAndCollapsesSpace) {
  EXPECT_EQ(normalize_arabic("  جمـــيل \t\n جدا  "), "جميل جدا");
}

TEST(Normalize, KeepsTaMarbutaAndYa) {
  EXPECT_EQ(normalize_arabic("مدرسة"), "مدرسة");
  EXPECT_EQ(normalize_arabic("على"), "على");
  EXPECT_EQ(normalize_arabic("في"), "في");
}

TEST(Normalize, InvalidUtf8PassesThrough) {
  const std::string bad = "a\xff" "b";
  EXPECT_EQ(normalize_arabic(bad), bad);
}

namespace {

// Random strings drawn from Arabic letters, diacritics, tatweel, alef forms,
// spaces and a few ASCII characters.
std::string random_text(std::mt19937& rng) {
  static const char* kPieces[] = {"ا", "أ", "إ", "آ", "ب", "ت", "ة", "ي", "ى", "ـ", "َ", "ُ",
                                  "ِ", "ّ", "ْ", "ً", " ", "  ", "\t", "x", "1", ".", "،"};
  std::uniform_int_distribution<int> len(0, 24), pick(0, std::size(kPieces) - 1);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += kPieces[pick(rng)];
  return s;
}

bool is_arabic_block(char32_t cp) { return cp >= 0x0600 && cp <= 0x06FF; }

}  // namespace

TEST(NormalizeProperty, Idempotent) {
  std::mt19937 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_text(rng);
    const auto once = normalize_arabic(x);
    EXPECT_EQ(normalize_arabic(once), once) << x;
  }
}

TEST(NormalizeProperty, NoNewCharacters) {
  std::mt19937 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_text(rng);
    const auto in = utf8::decode(x);
    const bool input_has_arabic =
        std::any_of(in.begin(), in.end(), [](char32_t c) { return is_arabic_block(c); });
    for (char32_t cp : utf8::decode(normalize_arabic(x))) {
      const bool allowed = cp == U' ' || in.find(cp) != std::u32string::npos ||
                           (input_has_arabic && is_arabic_block(cp));
      EXPECT_TRUE(allowed) << x;
    }
  }
}

TEST(Tokenize, SplitsOnWhitespaceAndStripsPunctuation) {
  const std::string s = "  Hello, (world)!  بدي؟ ";
  const auto toks = tokenize(s);
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[0].text, "Hello");
  EXPECT_EQ(toks[1].text, "world");
  EXPECT_EQ(toks[2].text, "بدي");
  for (const auto& t : toks) EXPECT_EQ(s.substr(t.begin, t.end - t.begin), t.text);
}

TEST(Tokenize, DropsPurePunctuation) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize(" ... ! ").empty());
  EXPECT_EQ(token_strings("a - b"), (std::vector<std::string>{"a", "b"}));
}

TEST(Tokenize, KeepsInnerPunctuation) {
  EXPECT_EQ(token_strings("Levantine-North e.g."), (std::vector<std::string>{"Levantine-North", "e.g"}));
}
