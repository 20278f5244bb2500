#include <doctest.h>

#include "graphtext/errors.hpp"
#include "graphtext/prompts.hpp"
#include "test_util.hpp"

using namespace graphtext;

namespace {

Document doc_with(const std::string& text) {
  return Document{"d", text, std::nullopt, Split::kTest, std::nullopt};
}

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

const LabelSet kR8Labels({"acq", "crude", "earn", "grain", "interest",
                          "money-fx", "ship", "trade"});

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("refine prompt substitutes the raw text") {
  const std::string raw =
      "bank of france leaves intervention rate unchanged at pct official.";
  const std::string prompt = render_refine_prompt(doc_with(raw));
  CHECK(prompt.rfind("Please generate a refined document", 0) == 0);
  CHECK(prompt.size() >= raw.size());
  CHECK(prompt.substr(prompt.size() - raw.size()) == raw);
  CHECK(prompt.find("[x]") == std::string::npos);
}

TEST_CASE("refine prompt keeps all four criteria") {
  const std::string prompt = render_refine_prompt(doc_with("a"));
  for (const char* item : {"1. The refined document should be abstract",
                           "2. The refined document should retain",
                           "3. The refined document should only contain",
                           "4. The refined document should be readable"}) {
    CHECK(prompt.find(item) != std::string::npos);
  }
  CHECK(prompt.find("Here is the content: a") != std::string::npos);
}

TEST_CASE("renders are deterministic and injective") {
  CHECK(render_refine_prompt(doc_with("same text")) ==
        render_refine_prompt(doc_with("same text")));
  CHECK(render_extract_prompt("one") != render_extract_prompt("two"));
}

TEST_CASE("extract prompt carries the triplet format and None fallback") {
  const std::string prompt = render_extract_prompt("Some refined text.");
  CHECK(prompt.find("('head entity', 'relation', 'tail entity')") !=
        std::string::npos);
  CHECK(prompt.find("please just output: \"None\"") != std::string::npos);
  CHECK(prompt.find("You are a knowledge graph extractor") == 0);
  CHECK_THROWS_AS(render_extract_prompt(""), ArgumentError);
}

TEST_CASE("zero-shot classify lists labels and has no examples") {
  const std::string prompt =
      render_classify_prompt(doc_with("some text"), kR8Labels, 0, {});
  CHECK(count_occurrences(
            prompt,
            "['acq', 'crude', 'earn', 'grain', 'interest', 'money-fx', "
            "'ship', 'trade']") == 2);
  CHECK(prompt.find("Good example") == std::string::npos);
  CHECK(prompt.find("Bad example") == std::string::npos);
  CHECK(prompt.find("###Input###:\nsome text\n###Output###:") !=
        std::string::npos);
}

TEST_CASE("two-shot reproduces the good/bad example pair") {
  const auto bank =
      load_shot_bank(gttest::data_dir().parent_path() / "resources" / "shots" /
                     "r8.jsonl");
  REQUIRE(bank.size() == 1);
  const std::string prompt =
      render_classify_prompt(doc_with("input text"), kR8Labels, 2, bank);
  CHECK(prompt.find("Good example: \n###Input###:\nchampion products") !=
        std::string::npos);
  CHECK(prompt.find("###Output###:\nearn") != std::string::npos);
  CHECK(prompt.find("Bad example:\n###Input###:\nchampion products") !=
        std::string::npos);
  CHECK(prompt.find("###Output###:\nloss") != std::string::npos);
  CHECK(count_occurrences(prompt, "###Input###:") == 3);
}

TEST_CASE("one-shot renders exactly one example block") {
  const std::vector<ShotExample> bank{{"example text", "earn", "loss"}};
  const std::string prompt =
      render_classify_prompt(doc_with("x"), kR8Labels, 1, bank);
  CHECK(count_occurrences(prompt, "Good example") == 1);
  CHECK(count_occurrences(prompt, "Bad example") == 0);
}

TEST_CASE("five-shot alternates good-first over three bank entries") {
  const std::vector<ShotExample> bank{{"t1", "earn", "loss"},
                                      {"t2", "acq", "profit"},
                                      {"t3", "ship", "boats"}};
  const std::string prompt =
      render_classify_prompt(doc_with("x"), kR8Labels, 5, bank);
  CHECK(count_occurrences(prompt, "Good example") == 3);
  CHECK(count_occurrences(prompt, "Bad example") == 2);
  CHECK(prompt.find("t3") != std::string::npos);
}

TEST_CASE("insufficient shot bank is an argument error") {
  const std::vector<ShotExample> bank{{"t1", "earn", "loss"}};
  CHECK_THROWS_AS(render_classify_prompt(doc_with("x"), kR8Labels, 5, bank),
                  ArgumentError);
  CHECK_THROWS_AS(render_classify_prompt(doc_with("x"), kR8Labels, 3, bank),
                  ArgumentError);
}

TEST_CASE("prompt templates carry exactly one [x]") {
  for (auto kind :
       {PromptKind::kRefine, PromptKind::kExtractKg, PromptKind::kClassify}) {
    CHECK(count_occurrences(prompt_template(kind), "[x]") == 1);
  }
  CHECK_FALSE(prompt_version().empty());
}

}  // TEST_SUITE
