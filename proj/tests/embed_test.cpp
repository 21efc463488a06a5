#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "psychoforge/embed.hpp"

namespace fs = std::filesystem;
using namespace psychoforge;
using namespace psychoforge::embed;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("pf_embed_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(LoadEmbeddings, RoundTripsTwoVectors) {
  fs::path dir = temp_dir();
  write_text_file(dir / "e.jsonl",
                  R"({"id":"q1","vector":[1.0,0.0,0.0,0.0]})"
                  "\n"
                  R"({"id":"q1#option_0","vector":[0.0,1.0,0.0,0.0]})"
                  "\n");
  EmbeddingSet set = load_embeddings(dir / "e.jsonl", 4);
  EXPECT_EQ(set.by_id.size(), 2u);
  EXPECT_EQ(set.dim, 4u);
  ASSERT_NE(set.find("q1"), nullptr);
  EXPECT_EQ(set.find("nope"), nullptr);
}

TEST(LoadEmbeddings, DimensionMismatchNamesOffendingId) {
  fs::path dir = temp_dir();
  write_text_file(dir / "e.jsonl",
                  R"({"id":"q1","vector":[1.0,0.0]})"
                  "\n"
                  R"({"id":"q2","vector":[1.0,0.0,3.0]})"
                  "\n");
  try {
    load_embeddings(dir / "e.jsonl");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("q2"), std::string::npos) << e.what();
  }
}

TEST(LoadEmbeddings, DuplicateIdsFirstWinWithCount) {
  fs::path dir = temp_dir();
  write_text_file(dir / "e.jsonl",
                  R"({"id":"q1","vector":[1.0,0.0]})"
                  "\n"
                  R"({"id":"q1","vector":[0.0,1.0]})"
                  "\n");
  EmbeddingSet set = load_embeddings(dir / "e.jsonl");
  EXPECT_EQ(set.by_id.size(), 1u);
  EXPECT_EQ(set.duplicates_dropped, 1u);
  EXPECT_DOUBLE_EQ((*set.find("q1"))[0], 1.0);
}

TEST(LoadEmbeddings, RejectsNonFiniteAndEmpty) {
  fs::path dir = temp_dir();
  write_text_file(dir / "bad1.jsonl", R"({"id":"q1","vector":[1.0,1e999]})" "\n");
  EXPECT_THROW(load_embeddings(dir / "bad1.jsonl"), ValidationError);
  write_text_file(dir / "bad2.jsonl", R"({"id":"q1","vector":[]})" "\n");
  EXPECT_THROW(load_embeddings(dir / "bad2.jsonl"), ValidationError);
}

TEST(SaveEmbeddings, RoundTrips) {
  fs::path dir = temp_dir();
  EmbeddingSet set;
  set.dim = 3;
  set.by_id["a"] = {0.5, -0.25, 1.0 / 3.0};
  set.by_id["b"] = {1.0, 2.0, 3.0};
  save_embeddings(set, dir / "e.jsonl");
  EmbeddingSet back = load_embeddings(dir / "e.jsonl", 3);
  EXPECT_EQ(back.by_id.size(), 2u);
  EXPECT_DOUBLE_EQ((*back.find("a"))[2], 1.0 / 3.0);
}

TEST(L2Normalize, UnitNormWithinTolerance) {
  std::vector<double> v{3.0, 4.0};
  std::vector<double> n = l2_normalize(v);
  EXPECT_NEAR(n[0], 0.6, 1e-12);
  EXPECT_NEAR(n[1], 0.8, 1e-12);
  EXPECT_NEAR(std::sqrt(dot(n, n)), 1.0, 1e-6);
  EXPECT_THROW(l2_normalize({0.0, 0.0}), ValidationError);
}

TEST(SemanticMetrics, HandComputedCosineAndDistance) {
  std::vector<double> correct{1.0, 0.0};
  std::vector<std::vector<double>> distractors{{0.0, 1.0}, {-1.0, 0.0}};
  SemanticOptionMetrics m = semantic_option_metrics(correct, distractors);
  EXPECT_NEAR(m.cos_sim_mean_correct_vs_distractors, -0.5, 1e-12);
  EXPECT_NEAR(m.mean_distractor_pairwise_distance, std::sqrt(2.0), 1e-12);
}

TEST(SemanticMetrics, SingleDistractorUsesNeutralDistance) {
  SemanticOptionMetrics m = semantic_option_metrics({1.0, 0.0}, {{0.0, 1.0}});
  EXPECT_NEAR(m.cos_sim_mean_correct_vs_distractors, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.mean_distractor_pairwise_distance, kNeutralDistance);
}

TEST(SemanticMetrics, NoDistractorsRejected) {
  EXPECT_THROW(semantic_option_metrics({1.0}, {}), ValidationError);
}

TEST(HashProvider, DeterministicUnitVectors) {
  HashEmbeddingProvider p(16, 99);
  std::vector<double> a = p.embed("some question text");
  std::vector<double> b = p.embed("some question text");
  std::vector<double> c = p.embed("other text");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NEAR(std::sqrt(dot(a, a)), 1.0, 1e-9);
  EXPECT_EQ(p.dim(), 16u);
}

TEST(OptionKey, ZeroBasedForm) {
  EXPECT_EQ(option_key("q7", 2), "q7#option_2");
}

TEST(CombinedText, UsesCorrectAnswer) {
  corpus::QuestionRecord q{"q1", "What is 2+2?", {"3", "4"}, 1, false};
  EXPECT_EQ(combined_question_text(q), "Question: What is 2+2?\nCorrect Answer: 4");
}
