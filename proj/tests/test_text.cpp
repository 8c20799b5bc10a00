#include <gtest/gtest.h>

#include <filesystem>

#include "toxvid/text.hpp"

using namespace toxvid;

TEST(SplitWords, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(split_words("  Yeh  VIDEO\tbahut\nachha "), (std::vector<std::string>{"yeh", "video", "bahut", "achha"}));
  EXPECT_TRUE(split_words("   ").empty());
}

TEST(Vocabulary, ReservedIdsAndUnknowns) {
  Vocabulary v;
  EXPECT_EQ(v.id("[PAD]"), kPadId);
  EXPECT_EQ(v.id("[SEP]"), kSepId);
  EXPECT_EQ(v.id("nahi"), kUnkId);
  EXPECT_THROW(Vocabulary({"a", "b", "c"}), std::invalid_argument);
}

TEST(BuildVocab, FrequencyThenLexicographicOrderWithCap) {
  const auto v = build_vocab({"b a a", "c b a", "d"}, 5);
  ASSERT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(3), "a");
  EXPECT_EQ(v.token(4), "b");
  EXPECT_FALSE(v.contains("c"));
  EXPECT_THROW(build_vocab({}, 10), std::invalid_argument);
  EXPECT_THROW(build_vocab({"a"}, 3), std::invalid_argument);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "toxvid_vocab";
  std::filesystem::create_directories(dir);
  const auto v = build_vocab({"tum kya kar rahe ho", "kya baat hai"}, 50);
  v.save(dir / "vocab.txt");
  EXPECT_EQ(Vocabulary::load(dir / "vocab.txt"), v);
}

TEST(Tokenize, PadsTruncatesAndMasks) {
  const auto v = build_vocab({"yeh video bahut achha hai"}, 50);
  auto t = tokenize("yeh video zzz", v, 5);
  EXPECT_EQ(t.ids.size(), 5u);
  EXPECT_EQ(t.ids[1], v.id("video"));
  EXPECT_EQ(t.ids[2], kUnkId);
  EXPECT_EQ(t.ids[3], kPadId);
  EXPECT_EQ(t.mask, (RowMask{1, 1, 1, 0, 0}));
  auto long_t = tokenize("yeh video bahut achha hai yeh", v, 3);
  EXPECT_EQ(long_t.mask, (RowMask{1, 1, 1}));
  auto empty = tokenize("", v, 4);
  EXPECT_EQ(empty.ids[0], kUnkId);
  EXPECT_EQ(empty.mask, (RowMask{1, 0, 0, 0}));
}

TEST(EmbedText, LooksUpRowsAndKeepsMask) {
  Matrix<double> table(4, 2);
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = static_cast<double>(i);
  auto e = embed_text<double>({{3, 0}, {1, 0}}, ad::Var<double>::constant(table));
  EXPECT_EQ(e.embeddings.value(), (Matrix<double>{{6, 7}, {0, 1}}));
  EXPECT_EQ(e.mask, (RowMask{1, 0}));
  EXPECT_THROW(embed_text<double>({{3, 0}, {0, 0}}, ad::Var<double>::constant(table)), std::invalid_argument);
}
