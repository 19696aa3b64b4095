#include "apeloss/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace apeloss::io {

using nlohmann::json;

namespace {

struct Field {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    fields.push_back({line.substr(start, end - start), start + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

// Line/column of a byte offset into `text`.
std::pair<std::size_t, std::size_t> locate(std::string_view text,
                                           std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

double number_field(const json& value, const std::string& key) {
  if (!value.is_number()) {
    throw ValidationError("config key '" + key + "' must be a number");
  }
  return value.get<double>();
}

std::size_t count_field(const json& value, const std::string& key) {
  if (!value.is_number_unsigned()) {
    throw ValidationError("config key '" + key +
                          "' must be a non-negative integer");
  }
  return value.get<std::size_t>();
}

std::string string_field(const json& value, const std::string& key) {
  if (!value.is_string()) {
    throw ValidationError("config key '" + key + "' must be a string");
  }
  return value.get<std::string>();
}

json number_or_null(const std::optional<double>& x) {
  return x ? json(round_for_report(*x)) : json(nullptr);
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column,
                       const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

ScoreSet parse_score_file(std::istream& in) {
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError(1, 1, "missing header line");
  if (strip_cr(raw) != kScoreFileHeader) {
    throw ParseError(1, 1,
                     "expected header '" + std::string(kScoreFileHeader) + "'");
  }

  std::vector<double> scores;
  std::vector<Label> labels;
  std::size_t line_no = 1;
  std::size_t blank_run_start = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = strip_cr(raw);
    if (line.empty()) {
      if (blank_run_start == 0) blank_run_start = line_no;
      continue;
    }
    if (blank_run_start != 0) {
      throw ParseError(blank_run_start, 1, "blank line inside the data rows");
    }
    const std::vector<Field> fields = split_fields(line);
    if (fields.size() != 3) {
      const std::size_t col =
          fields.size() > 3 ? fields[3].column - 1 : line.size() + 1;
      throw ParseError(line_no, col,
                       "expected 3 comma-separated fields, got " +
                           std::to_string(fields.size()));
    }
    std::size_t index = 0;
    if (!parse_number(fields[0].text, index)) {
      throw ParseError(line_no, fields[0].column, "index is not an integer");
    }
    if (index != scores.size()) {
      throw ParseError(line_no, fields[0].column,
                       "expected index " + std::to_string(scores.size()) +
                           ", got " + std::to_string(index));
    }
    double score = 0.0;
    if (!parse_number(fields[1].text, score)) {
      throw ParseError(line_no, fields[1].column, "score is not a number");
    }
    if (!std::isfinite(score)) {
      throw ValidationError("row " + std::to_string(index) + " (line " +
                            std::to_string(line_no) +
                            "): score is not finite");
    }
    const std::string_view label = fields[2].text;
    Label parsed;
    if (label == "1") {
      parsed = Label::Positive;
    } else if (label == "0") {
      parsed = Label::Negative;
    } else if (label == "-1") {
      parsed = Label::Ignore;
    } else {
      throw ParseError(line_no, fields[2].column,
                       "label must be 1, 0 or -1");
    }
    scores.push_back(score);
    labels.push_back(parsed);
  }
  if (scores.empty()) throw ValidationError("score file has no rows");
  return ScoreSet(std::move(scores), std::move(labels));
}

ScoreSet load_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open score file '" + path + "'");
  return parse_score_file(in);
}

std::string format_score_file(const ScoreSet& set) {
  std::string out(kScoreFileHeader);
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < set.size(); ++i) {
    const int label = set.label(i) == Label::Positive   ? 1
                      : set.label(i) == Label::Negative ? 0
                                                        : -1;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", i, set.score(i), label);
    out += buf;
  }
  return out;
}

DistanceKind parse_distance_kind(std::string_view s) {
  if (s == "step" || s == "H") return DistanceKind::Step;
  if (s == "sigmoid" || s == "S") return DistanceKind::Sigmoid;
  if (s == "ce-sigmoid" || s == "CE") return DistanceKind::CESigmoid;
  throw ValidationError("unknown distance '" + std::string(s) +
                        "' (expected step, sigmoid or ce-sigmoid)");
}

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "ranksum") return FilterMode::RankSum;
  if (s == "negcount") return FilterMode::ValidNegCount;
  throw ValidationError("unknown mode '" + std::string(s) +
                        "' (expected ranksum or negcount)");
}

GradientForm parse_gradient_form(std::string_view s) {
  if (s == "error-driven") return GradientForm::ErrorDriven;
  if (s == "autodiff-ce") return GradientForm::AutodiffCE;
  throw ValidationError("unknown gradient form '" + std::string(s) +
                        "' (expected error-driven or autodiff-ce)");
}

Reduction parse_reduction(std::string_view s) {
  if (s == "mean") return Reduction::MeanOverPositives;
  if (s == "sum") return Reduction::Sum;
  throw ValidationError("unknown reduction '" + std::string(s) +
                        "' (expected mean or sum)");
}

PairBudget parse_pair_budget(std::string_view s) {
  if (s == "unlimited") return PairBudget::unlimited();
  std::size_t q = 0;
  if (!parse_number(s, q) || q == 0) {
    throw ValidationError("pair budget must be a positive integer or "
                          "'unlimited', got '" + std::string(s) + "'");
  }
  return PairBudget::bounded(q);
}

LossConfig RunConfig::loss_config() const {
  LossConfig c;
  c.distance.kind = distance;
  c.distance.parameter = distance == DistanceKind::Step ? delta : lambda;
  c.filter.mode = mode;
  c.filter.threshold = threshold;
  c.filter.filter_numerator = filter_numerator;
  c.budget = budget;
  c.gradient_form = grad_form;
  c.reduction = reduction;
  c.rank_delta = rank_delta.value_or(delta);
  try {
    // Both are checked even when the distance ignores one of them.
    DistanceSpec::sigmoid(lambda).validate();
    DistanceSpec::step(delta).validate();
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return c;
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = locate(text, offset);
    throw ParseError(line, column, "invalid JSON in config");
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  RunConfig cfg;
  auto& gen = cfg.generator;
  for (const auto& [key, value] : doc.items()) {
    if (key == "distance") {
      cfg.distance = parse_distance_kind(string_field(value, key));
    } else if (key == "lambda") {
      cfg.lambda = number_field(value, key);
    } else if (key == "delta") {
      cfg.delta = number_field(value, key);
    } else if (key == "rank_delta") {
      cfg.rank_delta = number_field(value, key);
    } else if (key == "mode") {
      cfg.mode = parse_filter_mode(string_field(value, key));
    } else if (key == "threshold") {
      cfg.threshold = number_field(value, key);
    } else if (key == "filter_numerator") {
      if (!value.is_boolean()) {
        throw ValidationError("config key 'filter_numerator' must be a boolean");
      }
      cfg.filter_numerator = value.get<bool>();
    } else if (key == "q") {
      cfg.budget = value.is_string()
                       ? parse_pair_budget(value.get<std::string>())
                       : PairBudget::bounded(count_field(value, key));
    } else if (key == "grad_form") {
      cfg.grad_form = parse_gradient_form(string_field(value, key));
    } else if (key == "reduction") {
      cfg.reduction = parse_reduction(string_field(value, key));
    } else if (key == "seed") {
      gen.seed = count_field(value, key);
    } else if (key == "n_pos") {
      gen.n_pos = count_field(value, key);
    } else if (key == "n_neg") {
      gen.n_neg = count_field(value, key);
    } else if (key == "pos_mean") {
      gen.pos_mean = number_field(value, key);
    } else if (key == "pos_std") {
      gen.pos_std = number_field(value, key);
    } else if (key == "neg_mean") {
      gen.neg_mean = number_field(value, key);
    } else if (key == "neg_std") {
      gen.neg_std = number_field(value, key);
    } else if (key == "clamp") {
      if (value.is_null()) {
        gen.clamp.reset();
      } else if (value.is_array() && value.size() == 2) {
        gen.clamp = std::pair{number_field(value[0], key),
                              number_field(value[1], key)};
      } else {
        throw ValidationError("config key 'clamp' must be [lo, hi] or null");
      }
    } else if (key == "steps") {
      cfg.steps = count_field(value, key);
    } else if (key == "lr") {
      cfg.lr = number_field(value, key);
    } else if (key == "epsilon") {
      cfg.epsilon = number_field(value, key);
    } else if (key == "tolerance") {
      cfg.tolerance = number_field(value, key);
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(count_field(value, key));
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  cfg.loss_config();
  try {
    gen.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

json to_json(const RunConfig& c) {
  json j;
  j["distance"] = to_string(c.distance);
  j["lambda"] = c.lambda;
  j["delta"] = c.delta;
  j["rank_delta"] = c.rank_delta.value_or(c.delta);
  j["mode"] = to_string(c.mode);
  j["threshold"] = c.threshold;
  j["filter_numerator"] = c.filter_numerator;
  j["q"] = c.budget.q ? json(*c.budget.q) : json("unlimited");
  j["grad_form"] = to_string(c.grad_form);
  j["reduction"] = to_string(c.reduction);
  j["seed"] = c.generator.seed;
  j["n_pos"] = c.generator.n_pos;
  j["n_neg"] = c.generator.n_neg;
  j["pos_mean"] = c.generator.pos_mean;
  j["pos_std"] = c.generator.pos_std;
  j["neg_mean"] = c.generator.neg_mean;
  j["neg_std"] = c.generator.neg_std;
  j["clamp"] = c.generator.clamp
                   ? json::array({c.generator.clamp->first,
                                  c.generator.clamp->second})
                   : json(nullptr);
  j["steps"] = c.steps;
  j["lr"] = c.lr;
  j["epsilon"] = c.epsilon;
  j["tolerance"] = c.tolerance;
  j["threads"] = c.threads;
  return j;
}

double round_for_report(double x) {
  if (!std::isfinite(x)) return x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kReportDigits, x);
  return std::strtod(buf, nullptr);
}

json to_json(const LossResult& r) {
  json j;
  j["total_loss"] = round_for_report(r.total_loss);
  j["no_anchor"] = r.no_anchor;
  j["truncated"] = r.truncated;
  j["active_pairs"] = r.active_pairs();
  json per_anchor = json::array();
  for (const auto& [index, loss] : r.per_anchor_loss) {
    per_anchor.push_back({{"index", index}, {"loss", round_for_report(loss)}});
  }
  j["per_anchor"] = std::move(per_anchor);
  json stats = json::array();
  for (const RankStats& s : r.stats) {
    stats.push_back({{"anchor_index", s.anchor_index},
                     {"rank_plus", round_for_report(s.rank_plus)},
                     {"rank_minus", round_for_report(s.rank_minus)},
                     {"balance_constant", number_or_null(s.balance_constant)},
                     {"n_neg", s.n_neg},
                     {"active_pairs", s.active_pairs}});
  }
  j["stats"] = std::move(stats);
  if (r.has_gradient()) {
    json grad = json::array();
    for (const double g : r.gradient) grad.push_back(round_for_report(g));
    j["gradient"] = std::move(grad);
  } else {
    j["gradient"] = nullptr;
  }
  return j;
}

json to_json(const oracle::GradCheckReport& r) {
  json j;
  j["passed"] = r.passed;
  j["max_rel_error"] = round_for_report(r.max_rel_error);
  j["worst_index"] = r.worst_index;
  j["epsilon"] = r.epsilon;
  j["tolerance"] = r.tolerance;
  json analytic = json::array();
  json numeric = json::array();
  for (std::size_t i = 0; i < r.analytic.size(); ++i) {
    analytic.push_back(round_for_report(r.analytic[i]));
    numeric.push_back(round_for_report(r.numeric[i]));
  }
  j["analytic"] = std::move(analytic);
  j["numeric"] = std::move(numeric);
  return j;
}

json to_json(const sim::Trajectory& t) {
  json records = json::array();
  for (const sim::StepRecord& r : t.records) {
    records.push_back({{"step", r.step},
                       {"total_loss", round_for_report(r.total_loss)},
                       {"ranking_ap", round_for_report(r.ranking_ap)},
                       {"gradient_norm", round_for_report(r.gradient_norm)},
                       {"active_pairs", r.active_pairs}});
  }
  json scores = json::array();
  for (const double s : t.final_set.scores()) {
    scores.push_back(round_for_report(s));
  }
  return {{"records", std::move(records)}, {"final_scores", std::move(scores)}};
}

}  // namespace apeloss::io
