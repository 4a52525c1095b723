#pragma once

// Prompt rendering and completion parsing. Rendering turns (instruction,
// observed data, generated-so-far) into the exact text sent to a model;
// parsing is the strict inverse for the data section. Both are pure, so
// retry policy lives with the caller.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mprobe/sample.hpp"

namespace mprobe {

// Instruction wording, the sample separator for numeric tasks, and the
// record field labels for the language task. Defaults reproduce the
// formats the harness was designed around; load_prompt_template() lets a
// run override the wording from a JSON file so it stays auditable.
struct PromptTemplate {
  std::string instruction;
  char separator = ',';
  std::string id_label = "Id:";
  std::string x_label = "Fever:";
  std::string y_label = "Diagnosis:";

  static PromptTemplate defaults(TaskKind kind);
};

// Reads {"instruction": ..., "separator": ",", "id_label": ...} for one
// task kind from a JSON file of the form {"bernoulli": {...}, ...}.
// Missing fields keep their defaults.
PromptTemplate load_prompt_template(const std::string& path, TaskKind kind);

// Instruction, a space (newline for the language task), then every sample
// in observed order followed by the generated ones, each terminated by
// the separator so the completion begins mid-sequence. Observed and
// generated samples are indistinguishable in the output.
std::string render_prompt(const PromptTemplate& tmpl, const TaskSpec& task,
                          const ObservedDataset& observed, std::span<const Sample> generated);

// Renders just the data section (the part parse_all_samples inverts).
std::string render_data_section(const PromptTemplate& tmpl, TaskKind kind,
                                std::span<const Sample> observed,
                                std::span<const Sample> generated);

std::string render_sample(const PromptTemplate& tmpl, const Sample& sample, long record_id);

struct ParsedSample {
  Sample sample;
  std::size_t consumed = 0;
};

struct ParseFailure {
  std::string offending_prefix;
};

using ParseOutcome = std::variant<ParsedSample, ParseFailure>;

// Consumes leading whitespace/separators, then exactly one sample token:
// '0'/'1' for binary, sign + digits + '.' + one digit for real, or an
// Id/Fever/Diagnosis record with Y/N values (the Id value is ignored).
// The token must end at a separator, whitespace, or end of text.
ParseOutcome parse_next_sample(std::string_view text, TaskKind kind,
                               const PromptTemplate& tmpl = PromptTemplate{});

// True when the remaining text holds no further token (only whitespace
// and separators).
bool only_padding(std::string_view text, const PromptTemplate& tmpl);

// True when the text (after padding) is a proper prefix of a valid token
// cut short by the end of the text, e.g. "-0." or "Id: 3\nFev". Lets a
// caller tell routine response truncation apart from garbage.
bool is_truncated_token(std::string_view text, TaskKind kind,
                        const PromptTemplate& tmpl = PromptTemplate{});

// Parses an entire data section; throws on any failure.
std::vector<Sample> parse_all_samples(std::string_view text, TaskKind kind,
                                      const PromptTemplate& tmpl = PromptTemplate{});

}  // namespace mprobe
