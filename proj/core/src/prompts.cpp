#include "mprobe/prompts.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mprobe {

namespace {

constexpr std::size_t kFailurePrefixLength = 48;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_padding_char(char c, const PromptTemplate& tmpl) {
  return is_space(c) || c == tmpl.separator;
}

std::size_t skip_padding(std::string_view text, const PromptTemplate& tmpl) {
  std::size_t i = 0;
  while (i < text.size() && is_padding_char(text[i], tmpl)) ++i;
  return i;
}

// A token must end at padding or end of text; a trailing digit would make
// the tokenisation ambiguous.
bool at_boundary(std::string_view text, std::size_t pos, const PromptTemplate& tmpl) {
  return pos >= text.size() || is_padding_char(text[pos], tmpl);
}

ParseFailure failure_at(std::string_view text) {
  return ParseFailure{std::string(text.substr(0, kFailurePrefixLength))};
}

bool consume_literal(std::string_view text, std::size_t& pos, std::string_view literal) {
  if (text.substr(pos, literal.size()) != literal) return false;
  pos += literal.size();
  return true;
}

void skip_inline_space(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
}

// At least one line break, tolerating \r\n and blank lines.
bool consume_newlines(std::string_view text, std::size_t& pos) {
  std::size_t start = pos;
  while (pos < text.size() && (text[pos] == '\n' || text[pos] == '\r')) ++pos;
  return pos > start;
}

ParseOutcome parse_binary(std::string_view text, std::size_t offset, const PromptTemplate& tmpl) {
  std::string_view rest = text.substr(offset);
  if (rest.empty() || (rest[0] != '0' && rest[0] != '1')) return failure_at(rest);
  if (!at_boundary(rest, 1, tmpl)) return failure_at(rest);
  return ParsedSample{Sample::binary(rest[0] - '0'), offset + 1};
}

ParseOutcome parse_real(std::string_view text, std::size_t offset, const PromptTemplate& tmpl) {
  std::string_view rest = text.substr(offset);
  std::size_t pos = 0;
  bool negative = false;
  if (pos < rest.size() && (rest[pos] == '-' || rest[pos] == '+')) {
    negative = rest[pos] == '-';
    ++pos;
  }
  std::size_t digits_start = pos;
  long long integer_part = 0;
  while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
    if (pos - digits_start >= 12) return failure_at(rest);
    integer_part = integer_part * 10 + (rest[pos] - '0');
    ++pos;
  }
  if (pos == digits_start) return failure_at(rest);
  if (pos >= rest.size() || rest[pos] != '.') return failure_at(rest);
  ++pos;
  if (pos >= rest.size() || !std::isdigit(static_cast<unsigned char>(rest[pos]))) return failure_at(rest);
  const int tenth = rest[pos] - '0';
  ++pos;
  if (!at_boundary(rest, pos, tmpl)) return failure_at(rest);
  return ParsedSample{Sample::real(tenths_from_parts(negative, integer_part, tenth)), offset + pos};
}

bool consume_yn(std::string_view text, std::size_t& pos, int& value) {
  if (pos >= text.size()) return false;
  if (text[pos] == 'Y') value = 1;
  else if (text[pos] == 'N') value = 0;
  else return false;
  ++pos;
  return true;
}

ParseOutcome parse_pair(std::string_view text, std::size_t offset, const PromptTemplate& tmpl) {
  std::string_view rest = text.substr(offset);
  std::size_t pos = 0;
  if (!consume_literal(rest, pos, tmpl.id_label)) return failure_at(rest);
  skip_inline_space(rest, pos);
  std::size_t id_digits = 0;
  while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
    ++pos;  // the id value is ignored
    ++id_digits;
  }
  if (id_digits == 0) return failure_at(rest);
  if (!consume_newlines(rest, pos)) return failure_at(rest);
  if (!consume_literal(rest, pos, tmpl.x_label)) return failure_at(rest);
  skip_inline_space(rest, pos);
  int x = 0;
  if (!consume_yn(rest, pos, x)) return failure_at(rest);
  if (!consume_newlines(rest, pos)) return failure_at(rest);
  if (!consume_literal(rest, pos, tmpl.y_label)) return failure_at(rest);
  skip_inline_space(rest, pos);
  int y = 0;
  if (!consume_yn(rest, pos, y)) return failure_at(rest);
  if (!at_boundary(rest, pos, tmpl)) return failure_at(rest);
  return ParsedSample{Sample::pair(x, y), offset + pos};
}

}  // namespace

PromptTemplate PromptTemplate::defaults(TaskKind kind) {
  PromptTemplate tmpl;
  switch (kind) {
    case TaskKind::Bernoulli:
      tmpl.instruction =
          "Provided are independent, identically distributed tosses of a coin, "
          "which flips 1 with probability p where p is unknown:";
      break;
    case TaskKind::Gaussian:
      tmpl.instruction =
          "Provided are independent, identically distributed draws from a Gaussian, "
          "with fixed but unknown mean and unit variance:";
      break;
    case TaskKind::NaturalLanguage:
      tmpl.instruction =
          "You will make predictions for a novel disease. The observed dataset contains "
          "records for multiple subjects which are assumed to be independent and "
          "identically distributed. For each subject there are two binary variables, "
          "indicating fever and disease diagnosis, respectively. Output your prediction "
          "for the disease diagnosis of the next subject.";
      break;
  }
  return tmpl;
}

PromptTemplate load_prompt_template(const std::string& path, TaskKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prompt template file: " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  PromptTemplate tmpl = PromptTemplate::defaults(kind);
  const std::string key = to_string(kind);
  if (!doc.contains(key)) return tmpl;
  const nlohmann::json& entry = doc.at(key);
  if (entry.contains("instruction")) tmpl.instruction = entry.at("instruction").get<std::string>();
  if (entry.contains("separator")) {
    const std::string sep = entry.at("separator").get<std::string>();
    if (sep.size() != 1) throw std::runtime_error("separator must be a single character");
    tmpl.separator = sep[0];
  }
  if (entry.contains("id_label")) tmpl.id_label = entry.at("id_label").get<std::string>();
  if (entry.contains("x_label")) tmpl.x_label = entry.at("x_label").get<std::string>();
  if (entry.contains("y_label")) tmpl.y_label = entry.at("y_label").get<std::string>();
  return tmpl;
}

std::string render_sample(const PromptTemplate& tmpl, const Sample& sample, long record_id) {
  switch (sample.type()) {
    case Sample::Type::Binary:
      return sample.binary_value() == 1 ? "1" : "0";
    case Sample::Type::Real:
      return render_tenths(sample.real_value());
    case Sample::Type::Pair: {
      std::string out;
      out += tmpl.id_label;
      out += ' ';
      out += std::to_string(record_id);
      out += '\n';
      out += tmpl.x_label;
      out += ' ';
      out += sample.pair_x() == 1 ? 'Y' : 'N';
      out += '\n';
      out += tmpl.y_label;
      out += ' ';
      out += sample.pair_y() == 1 ? 'Y' : 'N';
      return out;
    }
  }
  throw std::logic_error("unreachable sample type");
}

std::string render_data_section(const PromptTemplate& tmpl, TaskKind kind,
                                std::span<const Sample> observed,
                                std::span<const Sample> generated) {
  std::string out;
  long record_id = 0;
  const auto append = [&](const Sample& s) {
    if (!s.matches(kind)) throw std::invalid_argument("sample kind does not match task kind");
    out += render_sample(tmpl, s, record_id++);
    out += kind == TaskKind::NaturalLanguage ? '\n' : tmpl.separator;
  };
  for (const Sample& s : observed) append(s);
  for (const Sample& s : generated) append(s);
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const TaskSpec& task,
                          const ObservedDataset& observed, std::span<const Sample> generated) {
  if (observed.task.kind != task.kind)
    throw std::invalid_argument("dataset task kind does not match requested task kind");
  std::string out = tmpl.instruction;
  if (!out.empty()) out += task.kind == TaskKind::NaturalLanguage ? '\n' : ' ';
  out += render_data_section(tmpl, task.kind, observed.samples, generated);
  return out;
}

ParseOutcome parse_next_sample(std::string_view text, TaskKind kind, const PromptTemplate& tmpl) {
  const std::size_t offset = skip_padding(text, tmpl);
  if (offset >= text.size()) return ParseFailure{""};
  switch (kind) {
    case TaskKind::Bernoulli: return parse_binary(text, offset, tmpl);
    case TaskKind::Gaussian: return parse_real(text, offset, tmpl);
    case TaskKind::NaturalLanguage: return parse_pair(text, offset, tmpl);
  }
  throw std::logic_error("unreachable task kind");
}

bool only_padding(std::string_view text, const PromptTemplate& tmpl) {
  return skip_padding(text, tmpl) == text.size();
}

namespace {

// Follows the real-number grammar as far as the text allows; true only if
// the text ends while still consistent and incomplete.
bool truncated_real(std::string_view rest) {
  std::size_t pos = 0;
  if (pos < rest.size() && (rest[pos] == '-' || rest[pos] == '+')) ++pos;
  if (pos == rest.size()) return true;
  std::size_t digits = 0;
  while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
    ++pos;
    ++digits;
  }
  if (digits == 0 || digits > 12) return false;
  if (pos == rest.size()) return true;
  if (rest[pos] != '.') return false;
  ++pos;
  return pos == rest.size();  // one more digit would complete the token
}

bool truncated_literal(std::string_view rest, std::size_t& pos, std::string_view literal,
                       bool& ended) {
  for (char c : literal) {
    if (pos == rest.size()) {
      ended = true;
      return true;
    }
    if (rest[pos] != c) return false;
    ++pos;
  }
  return true;
}

bool truncated_pair(std::string_view rest, const PromptTemplate& tmpl) {
  std::size_t pos = 0;
  bool ended = false;
  const auto inline_space = [&]() {
    while (pos < rest.size() && (rest[pos] == ' ' || rest[pos] == '\t')) ++pos;
  };
  const auto newlines = [&]() -> bool {
    std::size_t start = pos;
    while (pos < rest.size() && (rest[pos] == '\n' || rest[pos] == '\r')) ++pos;
    return pos > start;
  };

  if (!truncated_literal(rest, pos, tmpl.id_label, ended)) return false;
  if (ended || pos == rest.size()) return true;
  inline_space();
  if (pos == rest.size()) return true;
  std::size_t digits = 0;
  while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
    ++pos;
    ++digits;
  }
  if (digits == 0) return false;
  if (pos == rest.size()) return true;
  if (!newlines()) return false;
  if (pos == rest.size()) return true;

  if (!truncated_literal(rest, pos, tmpl.x_label, ended)) return false;
  if (ended || pos == rest.size()) return true;
  inline_space();
  if (pos == rest.size()) return true;
  if (rest[pos] != 'Y' && rest[pos] != 'N') return false;
  ++pos;
  if (pos == rest.size()) return true;
  if (!newlines()) return false;
  if (pos == rest.size()) return true;

  if (!truncated_literal(rest, pos, tmpl.y_label, ended)) return false;
  if (ended || pos == rest.size()) return true;
  inline_space();
  return pos == rest.size();  // the Y/N value would complete the record
}

}  // namespace

bool is_truncated_token(std::string_view text, TaskKind kind, const PromptTemplate& tmpl) {
  std::string_view rest = text.substr(skip_padding(text, tmpl));
  if (rest.empty()) return false;
  switch (kind) {
    case TaskKind::Bernoulli:
      return false;  // a single digit is never incomplete
    case TaskKind::Gaussian:
      return truncated_real(rest);
    case TaskKind::NaturalLanguage:
      return truncated_pair(rest, tmpl);
  }
  throw std::logic_error("unreachable task kind");
}

std::vector<Sample> parse_all_samples(std::string_view text, TaskKind kind,
                                      const PromptTemplate& tmpl) {
  std::vector<Sample> out;
  std::size_t pos = 0;
  while (pos < text.size() && !only_padding(text.substr(pos), tmpl)) {
    ParseOutcome outcome = parse_next_sample(text.substr(pos), kind, tmpl);
    if (const auto* failure = std::get_if<ParseFailure>(&outcome))
      throw std::runtime_error("parse failure at: " + failure->offending_prefix);
    const auto& parsed = std::get<ParsedSample>(outcome);
    out.push_back(parsed.sample);
    pos += parsed.consumed;
  }
  return out;
}

}  // namespace mprobe
